#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajex/clip.hpp"
#include "trajex/config.hpp"
#include "trajex/pipeline.hpp"

namespace trajex::synth {

enum class MotionType { kTranslate, kRotate, kStir, kHold };

/// One segment of a motion script. Segments run back to back; each starts
/// from the state the previous one left.
struct MotionPrimitive {
  MotionType type = MotionType::kHold;
  double duration = 0.0;     ///< seconds
  Vec3 delta = Vec3::Zero(); ///< translate: total displacement, meters
  Vec3 axis = Vec3::UnitY(); ///< rotate / stir: rotation axis
  double angle = 0.0;        ///< rotate: total angle, radians
  double radius = 0.0;       ///< stir: orbit radius, meters
  double turns = 1.0;        ///< stir: full revolutions

  static MotionPrimitive translate(double duration, const Vec3 &delta);
  static MotionPrimitive rotate(double duration, const Vec3 &axis, double angle);
  static MotionPrimitive stir(double duration, const Vec3 &axis, double radius, double turns);
  static MotionPrimitive hold(double duration);
};

enum class Shape { kBox, kSphere, kComposite };

struct ObjectSpec {
  Shape shape = Shape::kBox;
  double size = 0.12;  ///< box side or sphere diameter, meters
  int point_count = 150;
  Vec3 position{0.0, 0.19, 1.15};  ///< start-frame camera coordinates
};

struct NoiseSpec {
  double depth_sigma = 0.0;  ///< meters, per pixel
  double track_sigma = 0.0;  ///< meters, per coordinate
};

CameraIntrinsics default_intrinsics();

/// Declarative description of a synthetic clip inside a fixed furnished room.
struct SceneScript {
  std::string clip_id = "synth";
  std::string action = "move the object";
  std::string object_name = "box";
  bool rigid = true;
  double detection_confidence = 0.9;
  ObjectSpec object;
  std::vector<MotionPrimitive> object_motion;  ///< empty: object static
  std::vector<MotionPrimitive> camera_motion;  ///< empty: camera static
  double duration = 1.0;  ///< seconds, at most 4
  double fps = 10.0;
  NoiseSpec noise;
  std::uint64_t seed = 0;  ///< drives noise, texture speckle and track sampling

  /// round(duration · fps) + 1.
  int num_frames() const;
  /// Throws InputError when motion durations do not tile `duration` or
  /// parameters are out of range.
  void validate() const;
};

SceneScript script_from_json(const nlohmann::json &j);
nlohmann::json script_to_json(const SceneScript &s);

struct SynthClip {
  ClipBundle bundle;
  ObjectTrajectory ground_truth;
  /// Camera-k to start-frame transforms; [0] is identity.
  std::vector<RigidTransform> extrinsics;
};

/// Renders RGB-D frames, masks, detections and tracks for the script. The
/// same script gives bit-identical output.
SynthClip generate(const SceneScript &script,
                   const CameraIntrinsics &intrinsics = default_intrinsics());

/// Writes the clip as manifest + data files, plus ground_truth.jsonl and
/// extrinsics.json. Returns the manifest path.
std::filesystem::path write_clip(const SynthClip &clip, const std::filesystem::path &dir);

struct EndToEndResult {
  ClipOutcome outcome;
  SynthClip clip;
  std::optional<double> ade3d;  ///< set when the clip was accepted
  std::optional<double> gd;
};

/// Generates, extracts and compares against ground truth.
EndToEndResult end_to_end_check(const SceneScript &script, const PipelineConfig &config,
                                const CameraIntrinsics &intrinsics = default_intrinsics());

/// Ready-made scripts used by tests and the CLI.
SceneScript hold_script();
SceneScript lift_script();    ///< 0.10 m along camera z
SceneScript rotate_script();  ///< 90° about y
SceneScript stir_script();
/// Two frames with a random camera motion of at most `max_translation`
/// meters and `max_angle` radians.
SceneScript camera_pair_script(std::uint64_t seed, double max_translation = 0.02,
                               double max_angle = 0.0349);

}  // namespace trajex::synth
