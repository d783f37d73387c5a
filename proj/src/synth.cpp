#include "trajex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "trajex/error.hpp"
#include "trajex/io.hpp"
#include "trajex/metrics.hpp"

namespace trajex::synth {

namespace fs = std::filesystem;
using nlohmann::json;

MotionPrimitive MotionPrimitive::translate(double duration, const Vec3 &delta) {
  MotionPrimitive m;
  m.type = MotionType::kTranslate;
  m.duration = duration;
  m.delta = delta;
  return m;
}

MotionPrimitive MotionPrimitive::rotate(double duration, const Vec3 &axis, double angle) {
  MotionPrimitive m;
  m.type = MotionType::kRotate;
  m.duration = duration;
  m.axis = axis;
  m.angle = angle;
  return m;
}

MotionPrimitive MotionPrimitive::stir(double duration, const Vec3 &axis, double radius,
                                      double turns) {
  MotionPrimitive m;
  m.type = MotionType::kStir;
  m.duration = duration;
  m.axis = axis;
  m.radius = radius;
  m.turns = turns;
  return m;
}

MotionPrimitive MotionPrimitive::hold(double duration) {
  MotionPrimitive m;
  m.duration = duration;
  return m;
}

CameraIntrinsics default_intrinsics() { return {140.0, 140.0, 79.5, 59.5, 160, 120}; }

int SceneScript::num_frames() const { return int(std::lround(duration * fps)) + 1; }

namespace {

void validate_motion(const std::vector<MotionPrimitive> &motion, double duration,
                     const std::string &which) {
  if (motion.empty()) return;
  double total = 0.0;
  for (std::size_t i = 0; i < motion.size(); ++i) {
    const auto &m = motion[i];
    const std::string w = "script: " + which + "[" + std::to_string(i) + "]: ";
    if (!(m.duration > 0.0)) throw InputError(w + "duration must be > 0");
    if ((m.type == MotionType::kRotate || m.type == MotionType::kStir) &&
        !(m.axis.norm() > 1e-12))
      throw InputError(w + "axis must be nonzero");
    if (m.type == MotionType::kStir && !(m.radius > 0.0))
      throw InputError(w + "stir radius must be > 0");
    if (!m.delta.allFinite() || !m.axis.allFinite() || !std::isfinite(m.angle) ||
        !std::isfinite(m.turns))
      throw InputError(w + "non-finite parameter");
    total += m.duration;
  }
  if (std::abs(total - duration) > 1e-9 * std::max(1.0, duration))
    throw InputError("script: " + which + " durations sum to " + std::to_string(total) +
                     " s, clip lasts " + std::to_string(duration) + " s");
}

}  // namespace

void SceneScript::validate() const {
  if (clip_id.empty()) throw InputError("script: empty clip_id");
  if (!(duration > 0.0) || duration > ClipManifest::kMaxSpan)
    throw InputError("script: duration must lie in (0, 4] s");
  if (!(fps > 0.0)) throw InputError("script: fps must be > 0");
  if (std::abs(duration * fps - std::round(duration * fps)) > 1e-6)
    throw InputError("script: duration * fps must be a whole number of frame intervals");
  if (!(object.size > 0.0)) throw InputError("script: object size must be > 0");
  if (object.point_count < 3) throw InputError("script: object point_count must be >= 3");
  if (!object.position.allFinite()) throw InputError("script: object position is not finite");
  if (!(detection_confidence >= 0.0 && detection_confidence <= 1.0))
    throw InputError("script: detection_confidence must lie in [0, 1]");
  if (!(noise.depth_sigma >= 0.0) || !(noise.track_sigma >= 0.0))
    throw InputError("script: noise sigmas must be >= 0");
  validate_motion(object_motion, duration, "object_motion");
  validate_motion(camera_motion, duration, "camera_motion");
}

// ---------------------------------------------------------------------------
// Scene model

namespace {

struct Solid {
  enum Kind { kBox, kSphere } kind = kBox;
  RigidTransform pose;  ///< solid-local to parent frame
  Vec3 half = Vec3::Zero();
  double radius = 0.0;
  Vec3 base_color = Vec3::Constant(0.5);
  Vec3 wave = Vec3::UnitX();  ///< texture wave vector, cycles per meter
};

Solid box(const Vec3 &center, const Vec3 &half, const Vec3 &color, const Vec3 &wave,
          double yaw = 0.0) {
  Solid s;
  s.kind = Solid::kBox;
  s.pose.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix();
  s.pose.translation = center;
  s.half = half;
  s.base_color = color;
  s.wave = wave;
  return s;
}

Solid sphere(const Vec3 &center, double r, const Vec3 &color, const Vec3 &wave) {
  Solid s;
  s.kind = Solid::kSphere;
  s.pose.translation = center;
  s.radius = r;
  s.base_color = color;
  s.wave = wave;
  return s;
}

// Room in start-frame camera coordinates (y down, z forward).
const std::vector<Solid> &room() {
  static const std::vector<Solid> solids = {
      box({0, 0.95, 1.7}, {2.0, 0.05, 1.7}, {0.55, 0.45, 0.35}, {3.1, 0.0, 2.3}),      // floor
      box({0, -1.55, 1.7}, {2.0, 0.05, 1.7}, {0.85, 0.85, 0.8}, {1.3, 0.0, 1.7}),     // ceiling
      box({0, -0.3, 3.25}, {2.0, 1.3, 0.05}, {0.7, 0.75, 0.6}, {2.2, 1.9, 0.0}),      // back
      box({-1.65, -0.3, 1.7}, {0.05, 1.3, 1.7}, {0.6, 0.7, 0.8}, {0.0, 2.4, 1.6}),    // left
      box({1.65, -0.3, 1.7}, {0.05, 1.3, 1.7}, {0.8, 0.65, 0.6}, {0.0, 1.5, 2.8}),    // right
      box({0, 0.575, 1.35}, {0.6, 0.325, 0.35}, {0.45, 0.3, 0.2}, {4.0, 1.0, 3.3}),   // table
      box({-0.4, 0.15, 1.45}, {0.1, 0.1, 0.1}, {0.2, 0.5, 0.8}, {7.0, 5.0, 3.0}, 0.5),
      box({0.42, 0.1, 1.55}, {0.07, 0.15, 0.07}, {0.8, 0.3, 0.3}, {3.0, 8.0, 2.0}),
      sphere({0.27, 0.17, 1.22}, 0.08, {0.3, 0.8, 0.35}, {6.0, 6.0, 6.0}),
      box({-0.9, 0.65, 2.2}, {0.2, 0.25, 0.2}, {0.65, 0.6, 0.25}, {4.0, 3.0, 5.0}, 0.26),
      box({1.0, 0.5, 2.6}, {0.25, 0.4, 0.2}, {0.35, 0.35, 0.6}, {2.5, 4.5, 3.5}, -0.35),
      sphere({-0.5, -0.3, 3.0}, 0.2, {0.9, 0.6, 0.2}, {4.0, 4.0, 2.0}),
      box({0.4, -0.4, 3.1}, {0.4, 0.025, 0.1}, {0.5, 0.35, 0.25}, {5.0, 0.0, 5.0}),
      box({0.9, -0.2, 3.0}, {0.15, 0.2, 0.15}, {0.25, 0.6, 0.6}, {5.0, 3.0, 4.0}, 0.6),
      box({-1.2, 0.2, 2.9}, {0.2, 0.7, 0.25}, {0.6, 0.4, 0.55}, {3.0, 2.0, 3.0}, 0.2),
  };
  return solids;
}
constexpr int kDistractorSolid = 6;

std::vector<Solid> object_solids(const ObjectSpec &spec) {
  const double h = spec.size / 2;
  const Vec3 wave(9.0, 13.0, 7.0);
  switch (spec.shape) {
    case Shape::kBox:
      return {box(Vec3::Zero(), Vec3::Constant(h), {0.9, 0.5, 0.1}, wave)};
    case Shape::kSphere:
      return {sphere(Vec3::Zero(), h, {0.9, 0.5, 0.1}, wave)};
    case Shape::kComposite:
      return {box(Vec3(0, 0.2 * h, 0), Vec3(0.7 * h, 0.8 * h, 0.7 * h), {0.9, 0.5, 0.1}, wave),
              box(Vec3(0.95 * h, 0.2 * h, 0), Vec3(0.25 * h, 0.3 * h, 0.12 * h),
                  {0.2, 0.4, 0.9}, wave),
              sphere(Vec3(0, -0.6 * h, 0), 0.4 * h, {0.8, 0.2, 0.6}, wave)};
  }
  return {};
}

/// Ray parameter of the first hit in solid-local coordinates, or +inf.
double intersect(const Solid &s, const Vec3 &origin, const Vec3 &dir) {
  const Vec3 o = s.pose.rotation.transpose() * (origin - s.pose.translation);
  const Vec3 d = s.pose.rotation.transpose() * dir;
  constexpr double kEps = 1e-9;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (s.kind == Solid::kSphere) {
    const double a = d.squaredNorm(), b = o.dot(d), c = o.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - a * c;
    if (disc < 0) return kInf;
    const double sq = std::sqrt(disc);
    const double t0 = (-b - sq) / a, t1 = (-b + sq) / a;
    if (t0 > kEps) return t0;
    return t1 > kEps ? t1 : kInf;
  }
  double tn = -kInf, tf = kInf;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (std::abs(o[i]) > s.half[i]) return kInf;
      continue;
    }
    double t0 = (-s.half[i] - o[i]) / d[i], t1 = (s.half[i] - o[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    tn = std::max(tn, t0);
    tf = std::min(tf, t1);
  }
  if (tn > tf) return kInf;
  if (tn > kEps) return tn;
  return tf > kEps ? tf : kInf;
}

/// Smooth seeded value noise on a 4 cm lattice, trilinearly interpolated so
/// it stays consistent between viewpoints.
double speckle(std::uint64_t seed, const Vec3 &p) {
  constexpr double kCell = 0.04;
  const Vec3 q = p / kCell;
  const Eigen::Vector3d fl(std::floor(q.x()), std::floor(q.y()), std::floor(q.z()));
  const Vec3 f = q - fl;
  double out = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    std::uint64_t h = seed;
    h = registration::derive_seed(h, std::uint64_t(std::int64_t(fl.x()) + dx));
    h = registration::derive_seed(h, std::uint64_t(std::int64_t(fl.y()) + dy));
    h = registration::derive_seed(h, std::uint64_t(std::int64_t(fl.z()) + dz));
    const double value = double(h >> 11) * 0x1.0p-53 - 0.5;
    out += value * (dx ? f.x() : 1 - f.x()) * (dy ? f.y() : 1 - f.y()) * (dz ? f.z() : 1 - f.z());
  }
  return out;
}

Vec3 texture(const Solid &s, const Vec3 &local, std::uint64_t seed) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sin(two_pi * s.wave.dot(local));
  const double b = std::sin(two_pi * (0.7 * s.wave.y() * local.x() + 1.3 * s.wave.z() * local.y() +
                                      0.9 * s.wave.x() * local.z()) + 1.0);
  const double n = 0.12 * speckle(seed, local);
  Vec3 c = s.base_color + Vec3(0.25 * a + 0.1 * b + n, 0.2 * b - 0.1 * a + n, 0.15 * (a + b) + n);
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

struct State {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();
};

Vec3 perpendicular(const Vec3 &axis) {
  const Vec3 ref = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
  return axis.cross(ref).normalized();
}

State apply(const MotionPrimitive &m, const State &s, double frac) {
  State out = s;
  switch (m.type) {
    case MotionType::kHold: break;
    case MotionType::kTranslate: out.position += frac * m.delta; break;
    case MotionType::kRotate:
      out.rotation =
          Eigen::AngleAxisd(frac * m.angle, m.axis.normalized()).toRotationMatrix() * s.rotation;
      break;
    case MotionType::kStir: {
      const Vec3 axis = m.axis.normalized();
      const Vec3 center = s.position - m.radius * perpendicular(axis);
      const Mat3 r =
          Eigen::AngleAxisd(frac * 2.0 * std::numbers::pi * m.turns, axis).toRotationMatrix();
      out.rotation = r * s.rotation;
      out.position = center + r * (s.position - center);
      break;
    }
  }
  return out;
}

State state_at(const std::vector<MotionPrimitive> &motion, State s, double t) {
  double start = 0.0;
  for (const auto &m : motion) {
    const double end = start + m.duration;
    const double frac = std::clamp((t - start) / m.duration, 0.0, 1.0);
    s = apply(m, s, frac);
    if (t < end) break;
    start = end;
  }
  return s;
}

struct Pixel {
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  int solid = -1;        ///< room index, or -1
  int object_part = -1;  ///< object solid index, or -1
  Vec3 object_local = Vec3::Zero();
};

/// Ray casts the room and the posed object from camera pose `cam`.
std::vector<Pixel> render(const CameraIntrinsics &k, const RigidTransform &cam,
                          const std::vector<Solid> &object, const RigidTransform &object_pose,
                          std::uint64_t seed) {
  std::vector<Pixel> out(std::size_t(k.width) * k.height);
  const auto &solids = room();
  const RigidTransform to_object = invert(object_pose);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      // Camera-space direction with z = 1, so the ray parameter is the depth.
      const Vec3 dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Vec3 origin = cam.translation;
      const Vec3 dir = cam.rotation * dir_cam;
      Pixel &px = out[std::size_t(v) * k.width + u];
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < solids.size(); ++i) {
        const double t = intersect(solids[i], origin, dir);
        if (t < best) {
          best = t;
          px.solid = int(i);
        }
      }
      const Vec3 o_obj = to_object(origin);
      const Vec3 d_obj = to_object.rotation * dir;
      for (std::size_t i = 0; i < object.size(); ++i) {
        const double t = intersect(object[i], o_obj, d_obj);
        if (t < best) {
          best = t;
          px.object_part = int(i);
        }
      }
      if (!std::isfinite(best)) continue;
      px.depth = best;
      if (px.object_part >= 0) {
        px.solid = -1;
        const Solid &s = object[px.object_part];
        px.object_local = o_obj + best * d_obj;
        px.color = texture(s, s.pose.rotation.transpose() * (px.object_local - s.pose.translation),
                           seed);
      } else {
        const Solid &s = solids[px.solid];
        const Vec3 world = origin + best * dir;
        px.color = texture(s, s.pose.rotation.transpose() * (world - s.pose.translation), seed);
      }
    }
  }
  return out;
}

RigidTransform to_transform(const State &s) { return {s.rotation, s.position}; }

float to_float(double v) { return static_cast<float>(v); }

// g++ 11 at -O3 drops the double-float-double round trip when it vectorizes
// over a Vec3; keeping this out of line preserves the rounding.
[[gnu::noinline]] double round_to_float(double v) { return static_cast<float>(v); }

}  // namespace

SynthClip generate(const SceneScript &script, const CameraIntrinsics &intrinsics) {
  script.validate();
  intrinsics.validate();
  const CameraIntrinsics &k = intrinsics;
  const std::uint64_t seed = script.seed;
  const int n_frames = script.num_frames();
  std::mt19937_64 rng(registration::derive_seed(seed, 0x5eed));
  std::normal_distribution<double> depth_noise(0.0, script.noise.depth_sigma);
  std::normal_distribution<double> track_noise(0.0, script.noise.track_sigma);

  const auto object = object_solids(script.object);
  State object0;
  object0.position = script.object.position;

  SynthClip clip;
  ClipBundle &b = clip.bundle;
  b.manifest.clip_id = script.clip_id;
  b.manifest.action_description = script.action;
  b.manifest.object_name = script.object_name;
  b.manifest.rigid = script.rigid;
  b.manifest.t_start = 0.0;
  b.manifest.t_end = (n_frames - 1) / script.fps;
  b.manifest.fps = script.fps;
  b.manifest.intrinsics = k;

  std::vector<RigidTransform> object_poses;
  std::vector<Vec3> local_points;
  for (int f = 0; f < n_frames; ++f) {
    const double t = f / script.fps;
    const RigidTransform cam = to_transform(state_at(script.camera_motion, State{}, t));
    const RigidTransform obj = to_transform(state_at(script.object_motion, object0, t));
    clip.extrinsics.push_back(cam);
    object_poses.push_back(obj);

    const auto pixels = render(k, cam, object, obj, seed);
    registration::RgbdFrame frame{DepthImage(k.width, k.height), ColorImage(k.width, k.height)};
    int u_min = k.width, v_min = k.height, u_max = -1, v_max = -1;
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        const Pixel &px = pixels[std::size_t(v) * k.width + u];
        if (px.depth > 0.0) {
          const double noise = script.noise.depth_sigma > 0.0 ? depth_noise(rng) : 0.0;
          frame.depth.at(u, v) = to_float(std::max(px.depth + noise, 1e-3));
        }
        frame.color.set(u, v, px.color);
        if (px.object_part >= 0) {
          u_min = std::min(u_min, u);
          v_min = std::min(v_min, v);
          u_max = std::max(u_max, u);
          v_max = std::max(v_max, v);
        }
      }
    }
    if (u_max >= 0)
      b.detections.push_back({double(u_min), double(v_min), double(u_max + 1), double(v_max + 1),
                              script.detection_confidence, f});

    if (f == 0) {
      extraction::SegmentationMask truth{k.width, k.height, {}, script.object_name};
      extraction::SegmentationMask distractor{k.width, k.height, {}, script.object_name};
      truth.mask.resize(pixels.size());
      distractor.mask.resize(pixels.size());
      for (std::size_t i = 0; i < pixels.size(); ++i) {
        truth.mask[i] = pixels[i].object_part >= 0;
        distractor.mask[i] = pixels[i].solid == kDistractorSolid;
        if (pixels[i].object_part >= 0) local_points.push_back(pixels[i].object_local);
      }
      if (local_points.size() < std::size_t(script.object.point_count))
        throw InputError("script: object shows " + std::to_string(local_points.size()) +
                         " pixels in frame 0, fewer than point_count");
      b.masks = {distractor, truth};
    }
    b.frames.push_back(std::move(frame));
  }

  // Tracked points: a seeded subset of the object surface seen in frame 0.
  std::vector<std::size_t> order(local_points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(script.object.point_count);
  std::sort(order.begin(), order.end());

  const int n_points = script.object.point_count;
  extraction::TrackSet &tracks = b.tracks;
  tracks = extraction::TrackSet(n_frames, n_points);
  ObjectTrajectory &gt = clip.ground_truth;
  gt.action = script.action;
  gt.object_name = script.object_name;
  std::vector<Vec3> start_points;
  RotationVector previous;
  for (int f = 0; f < n_frames; ++f) {
    tracks.timestamps[f] = f / script.fps;
    const RigidTransform world_to_cam = invert(clip.extrinsics[f]);
    Vec3 sum = Vec3::Zero();
    for (int p = 0; p < n_points; ++p) {
      const Vec3 world = object_poses[f](local_points[order[p]]);
      sum += world;
      if (f == 0) start_points.push_back(world);
      Vec3 cam = world_to_cam(world);
      const bool in_view = cam.z() > 0.0 && k.contains(k.project(cam));
      if (script.noise.track_sigma > 0.0)
        for (int i = 0; i < 3; ++i) cam[i] += track_noise(rng);
      for (int i = 0; i < 3; ++i) cam[i] = round_to_float(cam[i]);
      tracks.at(f, p) = cam;
      tracks.visibility[std::size_t(f) * n_points + p] = in_view ? 1 : 0;
    }
    Pose pose;
    pose.position = sum / n_points;
    RotationVector r = matrix_to_rotvec(object_poses[f].rotation);
    if (f > 0) r = extraction::unwrap_rotation(r, previous);
    pose.rotation = previous = r;
    gt.poses.push_back(pose);
  }
  gt.bbox0 = extraction::min_bounding_box(start_points);
  if (!k.contains(k.project(gt.poses[0].position)) || gt.poses[0].position.z() <= 0.0)
    throw InputError("script: object centroid is outside frame 0");
  b.validate();
  return clip;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

const char *motion_name(MotionType t) {
  switch (t) {
    case MotionType::kTranslate: return "translate";
    case MotionType::kRotate: return "rotate";
    case MotionType::kStir: return "stir";
    case MotionType::kHold: return "hold";
  }
  return "hold";
}

Vec3 vec3_of(const json &j, const std::string &where) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number())
    throw InputError(where + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

double number(const json &j, const char *key, double fallback, const std::string &where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw InputError(where + ": '" + key + "' must be a number");
  return j[key].get<double>();
}

std::vector<MotionPrimitive> motion_from_json(const json &j, const std::string &where) {
  std::vector<MotionPrimitive> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw InputError(where + ": expected an array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const json &e = j[i];
    if (!e.is_object() || !e.contains("type") || !e["type"].is_string())
      throw InputError(w + ": needs a 'type'");
    const std::string type = e["type"];
    MotionPrimitive m;
    m.duration = number(e, "duration", 0.0, w);
    if (type == "translate") {
      m.type = MotionType::kTranslate;
      m.delta = vec3_of(e.value("delta", json()), w + ".delta");
    } else if (type == "rotate") {
      m.type = MotionType::kRotate;
      m.axis = vec3_of(e.value("axis", json()), w + ".axis");
      m.angle = number(e, "angle", 0.0, w);
    } else if (type == "stir") {
      m.type = MotionType::kStir;
      m.axis = vec3_of(e.value("axis", json()), w + ".axis");
      m.radius = number(e, "radius", 0.0, w);
      m.turns = number(e, "turns", 1.0, w);
    } else if (type == "hold") {
      m.type = MotionType::kHold;
    } else {
      throw InputError(w + ": unknown motion type '" + type + "'");
    }
    out.push_back(m);
  }
  return out;
}

json motion_to_json(const std::vector<MotionPrimitive> &motion) {
  json out = json::array();
  for (const auto &m : motion) {
    json e = {{"type", motion_name(m.type)}, {"duration", m.duration}};
    switch (m.type) {
      case MotionType::kTranslate: e["delta"] = {m.delta.x(), m.delta.y(), m.delta.z()}; break;
      case MotionType::kRotate:
        e["axis"] = {m.axis.x(), m.axis.y(), m.axis.z()};
        e["angle"] = m.angle;
        break;
      case MotionType::kStir:
        e["axis"] = {m.axis.x(), m.axis.y(), m.axis.z()};
        e["radius"] = m.radius;
        e["turns"] = m.turns;
        break;
      case MotionType::kHold: break;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace

SceneScript script_from_json(const json &j) {
  if (!j.is_object()) throw InputError("script: expected a JSON object");
  const std::string w = "script";
  SceneScript s;
  try {
    s.clip_id = j.value("clip_id", s.clip_id);
    s.action = j.value("action", s.action);
    s.object_name = j.value("object_name", s.object_name);
    s.rigid = j.value("rigid", s.rigid);
  } catch (const json::exception &) {
    throw InputError("script: clip_id, action, object_name must be strings and rigid a bool");
  }
  s.detection_confidence = number(j, "detection_confidence", s.detection_confidence, w);
  s.duration = number(j, "duration", s.duration, w);
  s.fps = number(j, "fps", s.fps, w);
  if (j.contains("object")) {
    const json &o = j["object"];
    const std::string shape = o.value("shape", std::string("box"));
    if (shape == "box") s.object.shape = Shape::kBox;
    else if (shape == "sphere") s.object.shape = Shape::kSphere;
    else if (shape == "composite") s.object.shape = Shape::kComposite;
    else throw InputError("script.object: unknown shape '" + shape + "'");
    s.object.size = number(o, "size", s.object.size, "script.object");
    s.object.point_count =
        int(number(o, "point_count", s.object.point_count, "script.object"));
    if (o.contains("position")) s.object.position = vec3_of(o["position"], "script.object.position");
  }
  s.object_motion = motion_from_json(j.value("object_motion", json()), "script.object_motion");
  s.camera_motion = motion_from_json(j.value("camera_motion", json()), "script.camera_motion");
  if (j.contains("noise")) {
    s.noise.depth_sigma = number(j["noise"], "depth_sigma", 0.0, "script.noise");
    s.noise.track_sigma = number(j["noise"], "track_sigma", 0.0, "script.noise");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw InputError("script: 'seed' must be a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  s.validate();
  return s;
}

json script_to_json(const SceneScript &s) {
  const char *shape = s.object.shape == Shape::kBox      ? "box"
                      : s.object.shape == Shape::kSphere ? "sphere"
                                                         : "composite";
  const Vec3 &p = s.object.position;
  return {{"clip_id", s.clip_id},
          {"action", s.action},
          {"object_name", s.object_name},
          {"rigid", s.rigid},
          {"detection_confidence", s.detection_confidence},
          {"duration", s.duration},
          {"fps", s.fps},
          {"object",
           {{"shape", shape},
            {"size", s.object.size},
            {"point_count", s.object.point_count},
            {"position", {p.x(), p.y(), p.z()}}}},
          {"object_motion", motion_to_json(s.object_motion)},
          {"camera_motion", motion_to_json(s.camera_motion)},
          {"noise", {{"depth_sigma", s.noise.depth_sigma}, {"track_sigma", s.noise.track_sigma}}},
          {"seed", s.seed}};
}

fs::path write_clip(const SynthClip &clip, const fs::path &dir) {
  fs::create_directories(dir);
  ClipManifest m = clip.bundle.manifest;
  m.paths = {};
  char name[64];
  for (std::size_t f = 0; f < clip.bundle.frames.size(); ++f) {
    std::snprintf(name, sizeof name, "rgb/%03zu.ppm", f);
    io::write_ppm(dir / name, clip.bundle.frames[f].color);
    m.paths.frames.push_back(name);
    std::snprintf(name, sizeof name, "depth/%03zu.egdp", f);
    io::write_depth(dir / name, clip.bundle.frames[f].depth);
    m.paths.depths.push_back(name);
  }
  for (std::size_t i = 0; i < clip.bundle.masks.size(); ++i) {
    std::snprintf(name, sizeof name, "masks/%02zu.pgm", i);
    io::write_pgm(dir / name, clip.bundle.masks[i]);
    m.paths.masks.push_back(name);
  }
  m.paths.detections = "detections.json";
  io::write_file(dir / m.paths.detections,
                 io::detections_to_json(clip.bundle.detections).dump(2) + "\n");
  m.paths.tracks = "tracks.egtr";
  io::write_tracks(dir / m.paths.tracks, clip.bundle.tracks);

  TrajectoryRecord gt;
  gt.clip_id = m.clip_id;
  gt.trajectory = clip.ground_truth;
  gt.intrinsics = m.intrinsics;
  io::write_file(dir / "ground_truth.jsonl", io::jsonl_line(io::record_to_json(gt)));

  json ext = json::array();
  for (const auto &e : clip.extrinsics) {
    const Mat4 mat = e.matrix();
    json rows = json::array();
    for (int r = 0; r < 4; ++r) rows.push_back({mat(r, 0), mat(r, 1), mat(r, 2), mat(r, 3)});
    ext.push_back(rows);
  }
  io::write_file(dir / "extrinsics.json", ext.dump() + "\n");

  const fs::path manifest = dir / "manifest.json";
  io::write_file(manifest, io::manifest_to_json(m).dump(2) + "\n");
  return manifest;
}

EndToEndResult end_to_end_check(const SceneScript &script, const PipelineConfig &config,
                                const CameraIntrinsics &intrinsics) {
  EndToEndResult r;
  r.clip = generate(script, intrinsics);
  r.outcome = extract_clip(r.clip.bundle, config);
  if (r.outcome.record) {
    const metrics::TrajectoryPair pair{r.outcome.record->trajectory.poses,
                                       r.clip.ground_truth.poses, intrinsics};
    const auto m = metrics::evaluate_pair(pair);
    r.ade3d = m.ade3d;
    r.gd = m.gd;
  }
  return r;
}

SceneScript hold_script() {
  SceneScript s;
  s.clip_id = "hold";
  s.action = "hold the box still";
  s.duration = 1.0;
  s.fps = 5.0;
  s.object_motion = {MotionPrimitive::hold(1.0)};
  s.camera_motion = {MotionPrimitive::translate(1.0, {0.02, 0.0, 0.0})};
  s.noise.track_sigma = 0.001;
  return s;
}

SceneScript lift_script() {
  SceneScript s = hold_script();
  s.clip_id = "lift";
  s.action = "lift the box";
  s.object_motion = {MotionPrimitive::translate(1.0, {0.0, 0.0, 0.10})};
  return s;
}

SceneScript rotate_script() {
  SceneScript s = hold_script();
  s.clip_id = "rotate";
  s.action = "turn the box a quarter turn";
  s.duration = 2.0;
  s.object_motion = {MotionPrimitive::rotate(2.0, Vec3::UnitY(), std::numbers::pi / 2)};
  s.camera_motion = {MotionPrimitive::rotate(2.0, Vec3::UnitY(), 0.03)};
  return s;
}

SceneScript stir_script() {
  SceneScript s = hold_script();
  s.clip_id = "stir";
  s.action = "stir with the object";
  s.object_name = "spoon";
  s.object.shape = Shape::kComposite;
  s.duration = 2.0;
  s.object_motion = {MotionPrimitive::stir(2.0, Vec3::UnitY(), 0.05, 1.0)};
  s.camera_motion = {MotionPrimitive::hold(2.0)};
  return s;
}

SceneScript camera_pair_script(std::uint64_t seed, double max_translation, double max_angle) {
  std::mt19937_64 rng(registration::derive_seed(seed, 0xca3e));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto direction = [&] {
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    return Vec3(v.normalized());
  };
  SceneScript s;
  s.clip_id = "pair-" + std::to_string(seed);
  s.seed = seed;
  s.action = "camera motion";
  s.fps = 10.0;
  s.duration = 0.1;
  const Vec3 delta = direction() * max_translation * unit(rng);
  const Vec3 axis = direction();
  const double angle = max_angle * unit(rng);
  s.camera_motion = {MotionPrimitive::translate(0.05, delta),
                     MotionPrimitive::rotate(0.05, axis, angle)};
  return s;
}

}  // namespace trajex::synth
