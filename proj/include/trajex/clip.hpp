#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trajex/extraction.hpp"
#include "trajex/geometry.hpp"
#include "trajex/registration.hpp"
#include "trajex/trajectory.hpp"

namespace trajex {

struct ClipPaths {
  std::vector<std::string> frames;  ///< PPM color frames
  std::vector<std::string> depths;  ///< depth files, meters
  std::vector<std::string> masks;   ///< PGM candidate masks for the start frame
  std::string detections;           ///< JSON list of detection boxes
  std::string tracks;               ///< binary track file
};

/// One clip as described on disk. Relative paths resolve against base_dir.
struct ClipManifest {
  std::string clip_id;
  std::string action_description;
  std::string object_name;
  bool rigid = true;
  double t_start = 0.0;
  double t_end = 0.0;
  double fps = 20.0;
  CameraIntrinsics intrinsics;
  ClipPaths paths;
  std::filesystem::path base_dir;

  /// Longest clip the pipeline accepts, seconds.
  static constexpr double kMaxSpan = 4.0;

  /// Field checks; `with_paths` also checks the file lists.
  void validate(bool with_paths = true) const;
  std::filesystem::path resolve(const std::string &p) const;
};

/// A fully loaded clip.
struct ClipBundle {
  ClipManifest manifest;
  std::vector<registration::RgbdFrame> frames;
  std::vector<extraction::SegmentationMask> masks;
  std::vector<extraction::DetectionBox> detections;
  extraction::TrackSet tracks;

  /// Cross-checks sizes between manifest, images and tracks.
  void validate() const;
};

struct PairProvenance {
  std::uint64_t seed = 0;
  double fitness = 0.0;
  double inlier_rmse = 0.0;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::vector<PairProvenance> pairs;
  std::size_t mask_index = 0;
  double detection_confidence = 0.0;
  std::size_t clamp_count = 0;  ///< values clamped when the record was last tokenized
};

/// One extracted trajectory as written to the records file.
struct TrajectoryRecord {
  std::string clip_id;
  ObjectTrajectory trajectory;
  std::optional<CameraIntrinsics> intrinsics;
  Provenance provenance;
};

}  // namespace trajex
