#include "trajex/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "trajex/error.hpp"

namespace trajex::io {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary formats are read by memcpy on little-endian hosts");

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &path, const std::string &bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

namespace {

std::uint64_t line_of(const std::string &text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + std::uint64_t(std::count(text.begin(), text.begin() + std::ptrdiff_t(offset), '\n'));
}

class Reader {
 public:
  Reader(std::string bytes, std::string origin)
      : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string &what) const { throw ParseError(origin_, pos_, what); }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      fail("truncated: need " + std::to_string(n) + " more bytes, have " +
           std::to_string(bytes_.size() - pos_));
  }
  void magic(const char *m) {
    const std::size_t n = std::strlen(m);
    need(n);
    if (bytes_.compare(pos_, n, m) != 0) fail(std::string("bad magic, expected ") + m);
    pos_ += n;
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void finish() const {
    if (pos_ != bytes_.size())
      fail(std::to_string(bytes_.size() - pos_) + " trailing bytes");
  }

  // Netpbm header helpers.
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  long header_int() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1L << 30)) fail("header value too large");
      ++pos_;
    }
    if (pos_ == start) fail("expected an integer in header");
    return v;
  }
  void single_space() {
    need(1);
    if (!std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      fail("expected whitespace after header");
    ++pos_;
  }
  const std::uint8_t *take(std::size_t n) {
    need(n);
    const auto *p = reinterpret_cast<const std::uint8_t *>(bytes_.data() + pos_);
    pos_ += n;
    return p;
  }

 private:
  std::string bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

template <typename T>
void put(std::string &out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

struct NetpbmImage {
  int width, height;
  const std::uint8_t *data;
};

NetpbmImage read_netpbm(Reader &r, const char *magic, int channels) {
  r.magic(magic);
  const long w = r.header_int();
  const long h = r.header_int();
  const long maxval = r.header_int();
  if (w <= 0 || h <= 0) r.fail("image dimensions must be positive");
  if (maxval != 255) r.fail("only 8-bit images (maxval 255) are supported");
  r.single_space();
  const auto *data = r.take(std::size_t(w) * h * channels);
  r.finish();
  return {int(w), int(h), data};
}

std::string netpbm_header(const char *magic, int w, int h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

template <typename T>
T field(const json &j, const char *key, const std::string &where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw InputError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json &j, const char *key, T fallback, const std::string &where) {
  if (!j.contains(key)) return fallback;
  return field<T>(j, key, where);
}

Vec3 vec3(const json &j, const std::string &where) {
  if (!j.is_array() || j.size() != 3) throw InputError(where + ": expected 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw InputError(where + ": expected 3 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

json vec3_json(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

json parse_json(const std::string &text, const std::string &origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(origin, byte, "invalid JSON", line_of(text, byte));
  }
}

json read_json_file(const fs::path &path) { return parse_json(read_file(path), path.string()); }

DepthImage read_depth(const fs::path &path) {
  Reader r(read_file(path), path.string());
  r.magic("EGDP");
  const auto w = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  if (w == 0 || h == 0 || w > 65535 || h > 65535) r.fail("implausible depth image size");
  DepthImage d{int(w), int(h)};
  for (auto &v : d.values) v = r.get<float>();
  r.finish();
  return d;
}

void write_depth(const fs::path &path, const DepthImage &depth) {
  std::string out = "EGDP";
  put(out, std::uint32_t(depth.width));
  put(out, std::uint32_t(depth.height));
  for (float v : depth.values) put(out, v);
  write_file(path, out);
}

ColorImage read_ppm(const fs::path &path) {
  Reader r(read_file(path), path.string());
  const auto img = read_netpbm(r, "P6", 3);
  ColorImage c(img.width, img.height);
  std::copy(img.data, img.data + c.rgb.size(), c.rgb.begin());
  return c;
}

void write_ppm(const fs::path &path, const ColorImage &image) {
  std::string out = netpbm_header("P6", image.width, image.height);
  out.append(reinterpret_cast<const char *>(image.rgb.data()), image.rgb.size());
  write_file(path, out);
}

extraction::SegmentationMask read_pgm(const fs::path &path, const std::string &label) {
  Reader r(read_file(path), path.string());
  const auto img = read_netpbm(r, "P5", 1);
  extraction::SegmentationMask m;
  m.width = img.width;
  m.height = img.height;
  m.label = label;
  m.mask.resize(std::size_t(m.width) * m.height);
  for (std::size_t i = 0; i < m.mask.size(); ++i) m.mask[i] = img.data[i] ? 1 : 0;
  return m;
}

void write_pgm(const fs::path &path, const extraction::SegmentationMask &mask) {
  std::string out = netpbm_header("P5", mask.width, mask.height);
  for (auto v : mask.mask) out.push_back(v ? char(255) : char(0));
  write_file(path, out);
}

extraction::TrackSet read_tracks(const fs::path &path) {
  Reader r(read_file(path), path.string());
  r.magic("EGTR");
  const auto t = r.get<std::uint32_t>();
  const auto p = r.get<std::uint32_t>();
  if (t == 0 || p == 0 || std::uint64_t(t) * p > (1ULL << 28)) r.fail("implausible track size");
  extraction::TrackSet tracks{int(t), int(p)};
  for (auto &x : tracks.positions)
    for (int i = 0; i < 3; ++i) x[i] = r.get<float>();
  for (auto &v : tracks.visibility) {
    const auto b = r.get<std::uint8_t>();
    if (b > 1) r.fail("visibility flags must be 0 or 1");
    v = b;
  }
  r.finish();
  return tracks;
}

void write_tracks(const fs::path &path, const extraction::TrackSet &tracks) {
  std::string out = "EGTR";
  put(out, std::uint32_t(tracks.num_frames));
  put(out, std::uint32_t(tracks.num_points));
  for (const auto &x : tracks.positions)
    for (int i = 0; i < 3; ++i) put(out, float(x[i]));
  for (auto v : tracks.visibility) put(out, std::uint8_t(v ? 1 : 0));
  write_file(path, out);
}

std::vector<extraction::DetectionBox> detections_from_json(const json &j) {
  if (!j.is_array()) throw InputError("detections: expected a JSON array");
  std::vector<extraction::DetectionBox> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "detections[" + std::to_string(i) + "]";
    const auto bbox = field<std::vector<double>>(j[i], "bbox", where);
    if (bbox.size() != 4) throw InputError(where + ": bbox needs 4 numbers");
    extraction::DetectionBox b;
    b.x_min = bbox[0];
    b.y_min = bbox[1];
    b.x_max = bbox[2];
    b.y_max = bbox[3];
    b.confidence = field<double>(j[i], "confidence", where);
    b.frame_index = field_or<int>(j[i], "frame_index", 0, where);
    if (!(b.x_max >= b.x_min && b.y_max >= b.y_min))
      throw InputError(where + ": bbox max corner precedes min corner");
    if (!(b.confidence >= 0.0 && b.confidence <= 1.0))
      throw InputError(where + ": confidence outside [0, 1]");
    out.push_back(b);
  }
  return out;
}

json detections_to_json(const std::vector<extraction::DetectionBox> &boxes) {
  json j = json::array();
  for (const auto &b : boxes)
    j.push_back({{"bbox", {b.x_min, b.y_min, b.x_max, b.y_max}},
                 {"confidence", b.confidence},
                 {"frame_index", b.frame_index}});
  return j;
}

json intrinsics_to_json(const CameraIntrinsics &k) {
  return {{"fx", k.fx}, {"fy", k.fy},       {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json &j) {
  CameraIntrinsics k;
  k.fx = field<double>(j, "fx", "intrinsics");
  k.fy = field<double>(j, "fy", "intrinsics");
  k.cx = field<double>(j, "cx", "intrinsics");
  k.cy = field<double>(j, "cy", "intrinsics");
  k.width = field<int>(j, "width", "intrinsics");
  k.height = field<int>(j, "height", "intrinsics");
  k.validate();
  return k;
}

ClipManifest manifest_from_json(const json &j, const fs::path &base_dir) {
  const std::string w = "manifest";
  ClipManifest m;
  m.clip_id = field<std::string>(j, "clip_id", w);
  m.action_description = field<std::string>(j, "action_description", w);
  m.object_name = field<std::string>(j, "object_name", w);
  m.rigid = field_or<bool>(j, "rigid", true, w);
  m.t_start = field<double>(j, "t_start", w);
  m.t_end = field<double>(j, "t_end", w);
  m.fps = field_or<double>(j, "fps", 20.0, w);
  if (!j.contains("intrinsics")) throw InputError(w + ": missing field 'intrinsics'");
  m.intrinsics = intrinsics_from_json(j["intrinsics"]);
  if (!j.contains("paths")) throw InputError(w + ": missing field 'paths'");
  const json &p = j["paths"];
  m.paths.frames = field<std::vector<std::string>>(p, "frames", "manifest.paths");
  m.paths.depths = field<std::vector<std::string>>(p, "depths", "manifest.paths");
  m.paths.masks = field<std::vector<std::string>>(p, "masks", "manifest.paths");
  m.paths.detections = field<std::string>(p, "detections", "manifest.paths");
  m.paths.tracks = field<std::string>(p, "tracks", "manifest.paths");
  m.base_dir = base_dir;
  m.validate();
  return m;
}

json manifest_to_json(const ClipManifest &m) {
  return {{"clip_id", m.clip_id},
          {"action_description", m.action_description},
          {"object_name", m.object_name},
          {"rigid", m.rigid},
          {"t_start", m.t_start},
          {"t_end", m.t_end},
          {"fps", m.fps},
          {"intrinsics", intrinsics_to_json(m.intrinsics)},
          {"paths",
           {{"frames", m.paths.frames},
            {"depths", m.paths.depths},
            {"masks", m.paths.masks},
            {"detections", m.paths.detections},
            {"tracks", m.paths.tracks}}}};
}

ClipManifest read_manifest(const fs::path &path) {
  return manifest_from_json(read_json_file(path), path.parent_path());
}

ClipBundle load_clip(const ClipManifest &manifest) {
  manifest.validate();
  ClipBundle b;
  b.manifest = manifest;
  for (std::size_t k = 0; k < manifest.paths.frames.size(); ++k) {
    registration::RgbdFrame f;
    f.color = read_ppm(manifest.resolve(manifest.paths.frames[k]));
    f.depth = read_depth(manifest.resolve(manifest.paths.depths[k]));
    b.frames.push_back(std::move(f));
  }
  for (const auto &m : manifest.paths.masks)
    b.masks.push_back(read_pgm(manifest.resolve(m), manifest.object_name));
  b.detections = detections_from_json(read_json_file(manifest.resolve(manifest.paths.detections)));
  b.tracks = read_tracks(manifest.resolve(manifest.paths.tracks));
  for (int k = 0; k < b.tracks.num_frames; ++k)
    b.tracks.timestamps[k] = manifest.t_start + k / manifest.fps;
  b.validate();
  return b;
}

json pose_to_json(const Pose &p) {
  const auto a = p.to_array();
  return json(std::vector<double>(a.begin(), a.end()));
}

Pose pose_from_json(const json &j) {
  if (!j.is_array() || j.size() != 6) throw InputError("pose: expected 6 numbers");
  std::array<double, 6> a;
  for (int i = 0; i < 6; ++i) {
    if (!j[i].is_number()) throw InputError("pose: expected 6 numbers");
    a[i] = j[i].get<double>();
  }
  return Pose::from_array(a);
}

json box_to_json(const OrientedBox3D &b) {
  json axes = json::array();
  for (int c = 0; c < 3; ++c) axes.push_back(vec3_json(b.axes.col(c)));
  return {{"center", vec3_json(b.center)}, {"axes", axes}, {"extents", vec3_json(b.extents)}};
}

OrientedBox3D box_from_json(const json &j) {
  OrientedBox3D b;
  if (!j.is_object()) throw InputError("bbox0: expected an object");
  b.center = vec3(j.value("center", json()), "bbox0.center");
  const json axes = j.value("axes", json());
  if (!axes.is_array() || axes.size() != 3) throw InputError("bbox0.axes: expected 3 vectors");
  for (int c = 0; c < 3; ++c) b.axes.col(c) = vec3(axes[c], "bbox0.axes");
  b.extents = vec3(j.value("extents", json()), "bbox0.extents");
  return b;
}

json record_to_json(const TrajectoryRecord &r) {
  json poses = json::array();
  for (const auto &p : r.trajectory.poses) poses.push_back(pose_to_json(p));
  json pairs = json::array();
  for (const auto &p : r.provenance.pairs)
    pairs.push_back({{"seed", p.seed}, {"fitness", p.fitness}, {"inlier_rmse", p.inlier_rmse}});
  json j = {{"clip_id", r.clip_id},
            {"action_description", r.trajectory.action},
            {"object_name", r.trajectory.object_name},
            {"poses", poses},
            {"bbox0", box_to_json(r.trajectory.bbox0)},
            {"provenance",
             {{"seed", r.provenance.seed},
              {"mask_index", r.provenance.mask_index},
              {"detection_confidence", r.provenance.detection_confidence},
              {"clamp_count", r.provenance.clamp_count},
              {"pairs", pairs}}}};
  if (r.intrinsics) j["intrinsics"] = intrinsics_to_json(*r.intrinsics);
  return j;
}

TrajectoryRecord record_from_json(const json &j) {
  const std::string w = "record";
  TrajectoryRecord r;
  r.clip_id = field<std::string>(j, "clip_id", w);
  r.trajectory.action = field_or<std::string>(j, "action_description", "", w);
  r.trajectory.object_name = field_or<std::string>(j, "object_name", "", w);
  if (!j.contains("poses") || !j["poses"].is_array() || j["poses"].empty())
    throw InputError(w + " " + r.clip_id + ": needs a non-empty 'poses' array");
  for (const auto &p : j["poses"]) r.trajectory.poses.push_back(pose_from_json(p));
  if (j.contains("bbox0")) r.trajectory.bbox0 = box_from_json(j["bbox0"]);
  if (j.contains("intrinsics")) r.intrinsics = intrinsics_from_json(j["intrinsics"]);
  if (j.contains("provenance")) {
    const json &p = j["provenance"];
    r.provenance.seed = field_or<std::uint64_t>(p, "seed", 0, w);
    r.provenance.mask_index = field_or<std::size_t>(p, "mask_index", 0, w);
    r.provenance.detection_confidence = field_or<double>(p, "detection_confidence", 0.0, w);
    r.provenance.clamp_count = field_or<std::size_t>(p, "clamp_count", 0, w);
    if (p.contains("pairs"))
      for (const auto &q : p["pairs"])
        r.provenance.pairs.push_back({field<std::uint64_t>(q, "seed", w),
                                      field<double>(q, "fitness", w),
                                      field<double>(q, "inlier_rmse", w)});
  }
  return r;
}

std::vector<json> read_jsonl(const fs::path &path) {
  const std::string text = read_file(path);
  std::vector<json> out;
  std::size_t start = 0;
  std::uint64_t line = 1;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string row = text.substr(start, end - start);
    if (row.find_first_not_of(" \t\r") != std::string::npos) {
      try {
        out.push_back(json::parse(row));
      } catch (const json::parse_error &e) {
        throw ParseError(path.string(), start + (e.byte > 0 ? e.byte - 1 : 0), "invalid JSON",
                         line);
      }
    }
    start = end + 1;
    ++line;
  }
  return out;
}

std::vector<TrajectoryRecord> read_records(const fs::path &path) {
  std::vector<TrajectoryRecord> out;
  for (const auto &j : read_jsonl(path)) out.push_back(record_from_json(j));
  return out;
}

std::string jsonl_line(const json &j) { return j.dump() + "\n"; }

json bins_to_json(const codec::BinSpec &spec) {
  json j;
  for (int d = 0; d < 6; ++d)
    j[codec::kDimNames[d]] = {{"lo", spec.dims[d].lo}, {"hi", spec.dims[d].hi}};
  return j;
}

codec::BinSpec bins_from_json(const json &j) {
  codec::BinSpec spec;
  for (int d = 0; d < 6; ++d) {
    const std::string name = codec::kDimNames[d];
    if (!j.contains(name)) throw InputError("bin spec: missing dimension '" + name + "'");
    spec.dims[d].lo = field<double>(j[name], "lo", "bin spec " + name);
    spec.dims[d].hi = field<double>(j[name], "hi", "bin spec " + name);
  }
  spec.validate();
  return spec;
}

}  // namespace trajex::io
