#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "support.hpp"
#include "trajex/error.hpp"
#include "trajex/synth.hpp"

namespace trajex::synth {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SceneScript quiet(SceneScript s) {
  s.noise = {};
  return s;
}

bool same_frames(const registration::RgbdFrame &a, const registration::RgbdFrame &b) {
  return a.depth.values.size() == b.depth.values.size() &&
         std::memcmp(a.depth.values.data(), b.depth.values.data(),
                     a.depth.values.size() * sizeof(float)) == 0 &&
         a.color.rgb == b.color.rgb;
}

TEST(Script, FrameCountAndValidation) {
  SceneScript s;
  s.duration = 2.0;
  s.fps = 10.0;
  EXPECT_EQ(s.num_frames(), 21);
  EXPECT_NO_THROW(s.validate());
  s.object_motion = {MotionPrimitive::translate(1.0, {0, 0.1, 0})};
  EXPECT_THROW(s.validate(), InputError);  // does not tile 2 s
  s.object_motion.push_back(MotionPrimitive::hold(1.0));
  EXPECT_NO_THROW(s.validate());
  s.duration = 5.0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.fps = 0.0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.object_motion = {MotionPrimitive::stir(1.0, Vec3::UnitY(), 0.0, 1.0)};
  EXPECT_THROW(s.validate(), InputError);
}

TEST(Script, JsonRoundTrip) {
  SceneScript s = stir_script();
  s.seed = 99;
  s.noise.depth_sigma = 0.002;
  s.camera_motion = {MotionPrimitive::translate(1.0, {0.01, 0, 0}),
                     MotionPrimitive::rotate(1.0, {0, 1, 0}, 0.05)};
  const SceneScript back = script_from_json(script_to_json(s));
  EXPECT_EQ(script_to_json(back), script_to_json(s));
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.object.shape, Shape::kComposite);
  EXPECT_THROW(script_from_json(nlohmann::json::parse(R"({"object": {"shape": "cone"}})")), InputError);
  EXPECT_THROW(script_from_json(nlohmann::json::parse("[1, 2]")), InputError);
}

TEST(Generate, HoldWithoutNoiseIsStatic) {
  SceneScript s = quiet(hold_script());
  s.camera_motion.clear();
  const SynthClip c = generate(s);
  ASSERT_EQ(int(c.bundle.frames.size()), s.num_frames());
  for (const auto &f : c.bundle.frames) EXPECT_TRUE(same_frames(f, c.bundle.frames[0]));
  for (const auto &p : c.ground_truth.poses) {
    EXPECT_EQ(p.position, c.ground_truth.poses[0].position);
    EXPECT_EQ(p.rotation.value, Vec3::Zero());
  }
  for (const auto &e : c.extrinsics) {
    EXPECT_EQ(e.rotation, Mat3::Identity());
    EXPECT_EQ(e.translation, Vec3::Zero());
  }
  const auto &t = c.bundle.tracks;
  for (int f = 1; f < t.num_frames; ++f)
    for (int p = 0; p < t.num_points; ++p) EXPECT_EQ(t.at(f, p), t.at(0, p));
}

TEST(Generate, ScriptedTranslationAppearsInGroundTruth) {
  SceneScript s;
  s.object_motion = {MotionPrimitive::translate(1.0, {0, 0.1, 0})};
  s.object.position = Vec3(0.0, 0.1, 1.15);
  const SynthClip c = generate(s);
  const Vec3 offset = c.ground_truth.poses.back().position - c.ground_truth.poses.front().position;
  EXPECT_LT((offset - Vec3(0, 0.1, 0)).norm(), 1e-12);
}

TEST(Generate, TwoTranslationsEqualOneCombined) {
  SceneScript one;
  one.object_motion = {MotionPrimitive::translate(1.0, {0.04, -0.02, 0.06})};
  SceneScript two = one;
  two.object_motion = {MotionPrimitive::translate(0.5, {0.01, -0.03, 0.02}),
                       MotionPrimitive::translate(0.5, {0.03, 0.01, 0.04})};
  const SynthClip a = generate(one), b = generate(two);
  const Vec3 da = a.ground_truth.poses.back().position - a.ground_truth.poses.front().position;
  const Vec3 db = b.ground_truth.poses.back().position - b.ground_truth.poses.front().position;
  EXPECT_LT((da - db).norm(), 1e-12);
}

TEST(Generate, CameraOrbitLeavesGroundTruthConstant) {
  SceneScript s = quiet(hold_script());
  s.camera_motion = {MotionPrimitive::rotate(1.0, Vec3::UnitY(), 10 * kDeg)};
  const SynthClip c = generate(s);
  const auto &t = c.bundle.tracks;
  for (const auto &p : c.ground_truth.poses) {
    EXPECT_LT((p.position - c.ground_truth.poses[0].position).norm(), 1e-12);
    EXPECT_LT(p.rotation.angle(), 1e-12);
  }
  // Raw tracks move in camera coordinates; mapped through the extrinsics they do not.
  const int last = t.num_frames - 1;
  EXPECT_GT((t.at(last, 0) - t.at(0, 0)).norm(), 0.05);
  for (int p = 0; p < t.num_points; ++p)
    EXPECT_LT((c.extrinsics[last](t.at(last, p)) - t.at(0, p)).norm(), 1e-6);
}

TEST(Generate, TracksConsistentWithinNoise) {
  SceneScript s = hold_script();
  s.noise.track_sigma = 0.002;
  const SynthClip c = generate(s);
  const auto &t = c.bundle.tracks;
  for (int f = 1; f < t.num_frames; ++f) {
    double sum2 = 0.0;
    for (int p = 0; p < t.num_points; ++p)
      sum2 += (c.extrinsics[f](t.at(f, p)) - t.at(0, p)).squaredNorm() / 3.0;
    EXPECT_LE(std::sqrt(sum2 / t.num_points), 3 * s.noise.track_sigma);
  }
}

TEST(Generate, BitDeterministic) {
  SceneScript s = lift_script();
  s.noise.depth_sigma = 0.001;
  const SynthClip a = generate(s), b = generate(s);
  ASSERT_EQ(a.bundle.frames.size(), b.bundle.frames.size());
  for (std::size_t f = 0; f < a.bundle.frames.size(); ++f)
    EXPECT_TRUE(same_frames(a.bundle.frames[f], b.bundle.frames[f]));
  EXPECT_EQ(a.bundle.tracks.positions, b.bundle.tracks.positions);
  EXPECT_EQ(a.bundle.tracks.visibility, b.bundle.tracks.visibility);
  s.seed = 1;
  const SynthClip other = generate(s);
  EXPECT_NE(other.bundle.tracks.positions, a.bundle.tracks.positions);
}

TEST(Generate, MasksDetectionsAndManifest) {
  const SynthClip c = generate(lift_script());
  const auto &b = c.bundle;
  ASSERT_EQ(b.masks.size(), 2u);
  const auto sel = extraction::select_object_mask(b.masks, b.detections);
  EXPECT_EQ(sel.index, 1u);
  EXPECT_GT(sel.iou, 0.99);
  EXPECT_EQ(b.detections.front().frame_index, 0);
  EXPECT_EQ(b.manifest.clip_id, "lift");
  EXPECT_EQ(b.manifest.intrinsics, default_intrinsics());
  EXPECT_NO_THROW(b.validate());
}

TEST(Generate, BackgroundIsDenseAndTextured) {
  const SynthClip c = generate(quiet(hold_script()));
  const auto &f = c.bundle.frames[0];
  int valid = 0;
  for (float d : f.depth.values) valid += DepthImage::valid(d);
  EXPECT_EQ(valid, f.depth.width * f.depth.height);
  // Neighbouring pixels differ in color across most of the image.
  int varied = 0;
  for (int v = 0; v < f.color.height; ++v)
    for (int u = 1; u < f.color.width; ++u) varied += (f.color.at(u, v) - f.color.at(u - 1, v)).norm() > 0;
  EXPECT_GT(varied, f.color.width * f.color.height / 2);
}

TEST(Generate, ObjectOutsideFrameIsScriptError) {
  SceneScript s;
  s.object.position = Vec3(3.0, 0.0, 1.0);
  EXPECT_THROW(generate(s), InputError);
}

TEST(EndToEnd, ZeroNoiseHold) {
  const EndToEndResult r = end_to_end_check(quiet(hold_script()), PipelineConfig{});
  ASSERT_TRUE(r.ade3d) << r.outcome.detail;
  EXPECT_LT(*r.ade3d, 1e-3);
}

TEST(EndToEnd, StirKeepsRotationError) {
  const EndToEndResult r = end_to_end_check(stir_script(), PipelineConfig{});
  ASSERT_TRUE(r.gd) << r.outcome.detail;
  EXPECT_LT(*r.gd, 0.05);
  EXPECT_LT(*r.ade3d, 0.01);
}

}  // namespace
}  // namespace trajex::synth
