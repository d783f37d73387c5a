#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>

#include "support.hpp"
#include "trajex/error.hpp"
#include "trajex/io.hpp"
#include "trajex/synth.hpp"

namespace trajex::io {
namespace {

using namespace trajex::testing;
using nlohmann::json;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "trajex_io_tests" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(TempDir, DepthRoundTripIsBitExact) {
  Rng rng(1);
  DepthImage d(7, 5);
  for (auto &v : d.values) v = float(uniform(rng, 0, 10));
  d.values[3] = 0.0f;
  d.values[4] = std::numeric_limits<float>::quiet_NaN();
  write_depth(dir_ / "d.egdp", d);
  const DepthImage back = read_depth(dir_ / "d.egdp");
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(std::memcmp(back.values.data(), d.values.data(), d.values.size() * 4), 0);
  EXPECT_EQ(fs::file_size(dir_ / "d.egdp"), 4u + 8u + 35u * 4u);
  EXPECT_EQ(read_file(dir_ / "d.egdp").substr(0, 4), "EGDP");
}

TEST_F(TempDir, TruncatedDepthIsParseErrorNamingFile) {
  DepthImage d(4, 4);
  write_depth(dir_ / "d.egdp", d);
  std::string bytes = read_file(dir_ / "d.egdp");
  bytes.resize(bytes.size() - 3);
  write_file(dir_ / "cut.egdp", bytes);
  try {
    read_depth(dir_ / "cut.egdp");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find("cut.egdp"), std::string::npos);
    EXPECT_EQ(e.offset(), 12u + 15u * 4u);
  }
  write_file(dir_ / "magic.egdp", "XXXX" + bytes.substr(4));
  EXPECT_THROW(read_depth(dir_ / "magic.egdp"), ParseError);
  EXPECT_THROW(read_depth(dir_ / "missing.egdp"), InputError);
}

TEST_F(TempDir, PpmAndPgmRoundTrip) {
  Rng rng(2);
  ColorImage c(6, 4);
  for (auto &b : c.rgb) b = std::uint8_t(rng());
  write_ppm(dir_ / "c.ppm", c);
  const ColorImage cb = read_ppm(dir_ / "c.ppm");
  EXPECT_EQ(cb.width, 6);
  EXPECT_EQ(cb.rgb, c.rgb);
  EXPECT_EQ(read_file(dir_ / "c.ppm").substr(0, 2), "P6");

  extraction::SegmentationMask m{5, 3, std::vector<std::uint8_t>(15, 0), "cup"};
  m.mask[4] = 255;
  m.mask[7] = 255;
  write_pgm(dir_ / "m.pgm", m);
  const auto mb = read_pgm(dir_ / "m.pgm", "cup");
  EXPECT_EQ(mb.width, 5);
  EXPECT_TRUE(mb.at(4, 0));
  EXPECT_TRUE(mb.at(2, 1));
  EXPECT_FALSE(mb.at(0, 0));
  EXPECT_EQ(mb.label, "cup");
}

TEST_F(TempDir, PpmWithCommentsParses) {
  write_file(dir_ / "h.ppm", std::string("P6\n# note\n2 1\n255\n") + std::string("\x01\x02\x03\x04\x05\x06", 6));
  const ColorImage c = read_ppm(dir_ / "h.ppm");
  EXPECT_EQ(c.rgb, (std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6}));
  write_file(dir_ / "bad.ppm", "P6\n2 1\n65535\n");
  EXPECT_THROW(read_ppm(dir_ / "bad.ppm"), ParseError);
}

TEST_F(TempDir, TracksRoundTrip) {
  Rng rng(3);
  extraction::TrackSet t(3, 4);
  for (auto &p : t.positions)
    for (int i = 0; i < 3; ++i) p[i] = float(uniform(rng, -1, 1));
  t.visibility[5] = 0;
  write_tracks(dir_ / "t.egtr", t);
  const auto back = read_tracks(dir_ / "t.egtr");
  EXPECT_EQ(back.num_frames, 3);
  EXPECT_EQ(back.num_points, 4);
  EXPECT_EQ(back.positions, t.positions);
  EXPECT_EQ(back.visibility, t.visibility);
  EXPECT_EQ(fs::file_size(dir_ / "t.egtr"), 4u + 8u + 12u * 12u + 12u);
}

TEST(Json, ParseErrorReportsLine) {
  try {
    parse_json("{\n  \"a\": 1,\n  \"b\": ]\n}", "script.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.path(), "script.json");
  }
}

TEST(Json, DetectionsRoundTrip) {
  const std::vector<extraction::DetectionBox> d{{1, 2, 30, 40, 0.75, 0}, {3, 4, 5, 6, 0.25, 2}};
  const auto back = detections_from_json(detections_to_json(d));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].x_max, 5);
  EXPECT_EQ(back[1].confidence, 0.25);
  EXPECT_EQ(back[1].frame_index, 2);
  EXPECT_THROW(detections_from_json(json::parse(R"([{"bbox": [5, 0, 1, 1], "confidence": 0.5}])")),
               InputError);
  EXPECT_THROW(detections_from_json(json::parse(R"([{"bbox": [0, 0, 1, 1], "confidence": 1.5}])")),
               InputError);
}

TEST(Json, RecordRoundTripIsBitExact) {
  Rng rng(4);
  TrajectoryRecord r;
  r.clip_id = "c1";
  r.trajectory.action = "open the jar";
  r.trajectory.object_name = "jar";
  r.trajectory.poses = random_poses(rng, 9);
  r.trajectory.bbox0.center = uniform_vec(rng, -1, 1);
  r.trajectory.bbox0.axes = random_rotation(rng);
  r.trajectory.bbox0.extents = uniform_vec(rng, 0.01, 0.2);
  r.intrinsics = CameraIntrinsics{500.5, 501.25, 320, 240, 640, 480};
  r.provenance.seed = 0xfeedfacecafebeefULL;
  r.provenance.pairs = {{12, 0.8125, 0.0031}, {13, 0.75, 0.0042}};
  r.provenance.mask_index = 1;
  r.provenance.detection_confidence = 0.93;
  const std::string line = jsonl_line(record_to_json(r));
  EXPECT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
  const TrajectoryRecord back = record_from_json(json::parse(line));
  EXPECT_EQ(back.clip_id, r.clip_id);
  ASSERT_EQ(back.trajectory.poses.size(), 9u);
  for (int k = 0; k < 9; ++k) {
    EXPECT_EQ(back.trajectory.poses[k].position, r.trajectory.poses[k].position);
    EXPECT_EQ(back.trajectory.poses[k].rotation.value, r.trajectory.poses[k].rotation.value);
  }
  EXPECT_EQ(back.trajectory.bbox0.axes, r.trajectory.bbox0.axes);
  EXPECT_EQ(back.provenance.seed, r.provenance.seed);
  EXPECT_EQ(back.provenance.pairs[1].inlier_rmse, 0.0042);
  EXPECT_EQ(*back.intrinsics, *r.intrinsics);
  EXPECT_EQ(jsonl_line(record_to_json(back)), line);
}

TEST(Json, BinSpecFieldNames) {
  codec::BinSpec s;
  for (int d = 0; d < 6; ++d) s.dims[d] = {-0.1 * (d + 1), 0.3 * (d + 1)};
  const json j = bins_to_json(s);
  for (const char *name : {"x", "y", "z", "roll", "pitch", "yaw"}) {
    ASSERT_TRUE(j.contains(name));
    EXPECT_TRUE(j[name].contains("lo"));
    EXPECT_TRUE(j[name].contains("hi"));
  }
  const auto back = bins_from_json(j);
  for (int d = 0; d < 6; ++d) EXPECT_EQ(back.dims[d].hi, s.dims[d].hi);
  json bad = j;
  bad.erase("yaw");
  EXPECT_THROW(bins_from_json(bad), InputError);
}

TEST_F(TempDir, JsonlReportsLineOfBadRow) {
  write_file(dir_ / "r.jsonl", "{\"a\": 1}\n\n{\"a\": 2}\n{oops}\n");
  try {
    read_jsonl(dir_ / "r.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST_F(TempDir, SynthClipLoadsLosslessly) {
  const synth::SynthClip clip = synth::generate(synth::lift_script());
  const fs::path manifest = synth::write_clip(clip, dir_ / "lift");
  const ClipBundle b = load_clip(read_manifest(manifest));
  ASSERT_EQ(b.frames.size(), clip.bundle.frames.size());
  for (std::size_t k = 0; k < b.frames.size(); ++k) {
    EXPECT_EQ(b.frames[k].color.rgb, clip.bundle.frames[k].color.rgb);
    EXPECT_EQ(std::memcmp(b.frames[k].depth.values.data(), clip.bundle.frames[k].depth.values.data(),
                          b.frames[k].depth.values.size() * 4),
              0);
  }
  EXPECT_EQ(b.tracks.positions, clip.bundle.tracks.positions);
  EXPECT_EQ(b.tracks.visibility, clip.bundle.tracks.visibility);
  EXPECT_EQ(b.tracks.timestamps, clip.bundle.tracks.timestamps);
  ASSERT_EQ(b.masks.size(), clip.bundle.masks.size());
  for (std::size_t i = 0; i < b.masks.size(); ++i)
    for (std::size_t p = 0; p < b.masks[i].mask.size(); ++p)
      ASSERT_EQ(b.masks[i].mask[p] != 0, clip.bundle.masks[i].mask[p] != 0);
  ASSERT_EQ(b.detections.size(), clip.bundle.detections.size());
  EXPECT_EQ(b.detections[0].x_min, clip.bundle.detections[0].x_min);
  EXPECT_EQ(b.manifest.intrinsics, clip.bundle.manifest.intrinsics);
  EXPECT_EQ(b.manifest.action_description, clip.bundle.manifest.action_description);
}

TEST_F(TempDir, ManifestSpanOverFourSecondsRejected) {
  const synth::SynthClip clip = synth::generate(synth::hold_script());
  const fs::path path = synth::write_clip(clip, dir_ / "hold");
  json j = read_json_file(path);
  j["t_start"] = 0.0;
  j["t_end"] = 5.0;
  EXPECT_THROW(manifest_from_json(j, dir_), InputError);
  j["t_end"] = 0.0;
  EXPECT_THROW(manifest_from_json(j, dir_), InputError);
  j = read_json_file(path);
  j.erase("intrinsics");
  EXPECT_THROW(manifest_from_json(j, dir_), InputError);
}

TEST_F(TempDir, LoadClipReportsBrokenFile) {
  const synth::SynthClip clip = synth::generate(synth::hold_script());
  const fs::path path = synth::write_clip(clip, dir_ / "hold");
  const ClipManifest m = read_manifest(path);
  const fs::path depth = m.resolve(m.paths.depths[2]);
  std::string bytes = read_file(depth);
  bytes.resize(20);
  write_file(depth, bytes);
  try {
    load_clip(m);
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(fs::path(e.path()).filename(), depth.filename());
  }
}

TEST_F(TempDir, ManifestDefaultsAndRoundTrip) {
  const synth::SynthClip clip = synth::generate(synth::hold_script());
  const fs::path path = synth::write_clip(clip, dir_ / "hold");
  json j = read_json_file(path);
  j.erase("fps");
  j.erase("rigid");
  j["t_end"] = j["t_start"].get<double>() + 0.2;
  j["paths"]["frames"] = json::array({"a.ppm", "b.ppm", "c.ppm", "d.ppm", "e.ppm"});
  j["paths"]["depths"] = json::array({"a", "b", "c", "d", "e"});
  const ClipManifest m = manifest_from_json(j, dir_);
  EXPECT_EQ(m.fps, 20.0);
  EXPECT_TRUE(m.rigid);
  EXPECT_EQ(manifest_from_json(manifest_to_json(m), dir_).paths.frames, m.paths.frames);
}

}  // namespace
}  // namespace trajex::io
