#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajex/geometry.hpp"
#include "trajex/trajectory.hpp"

namespace trajex::extraction {

/// Minimum best-detection confidence for a clip to be kept.
inline constexpr double kMinDetectionConfidence = 0.3;
/// Floor applied to degenerate bounding-box extents, meters.
inline constexpr double kMinBoxExtent = 1e-3;

/// T frames × P tracked points, positions in each frame's camera coordinates.
struct TrackSet {
  int num_frames = 0;
  int num_points = 0;
  std::vector<Vec3> positions;         ///< frame-major, T·P
  std::vector<std::uint8_t> visibility;  ///< frame-major, T·P, 0 or 1
  std::vector<double> timestamps;      ///< seconds, strictly increasing

  TrackSet() = default;
  TrackSet(int frames, int points)
      : num_frames(frames),
        num_points(points),
        positions(std::size_t(frames) * points, Vec3::Zero()),
        visibility(std::size_t(frames) * points, 1),
        timestamps(frames, 0.0) {}

  Vec3 &at(int t, int p) { return positions[std::size_t(t) * num_points + p]; }
  const Vec3 &at(int t, int p) const { return positions[std::size_t(t) * num_points + p]; }
  bool visible(int t, int p) const { return visibility[std::size_t(t) * num_points + p] != 0; }
  std::span<const Vec3> frame(int t) const {
    return {positions.data() + std::size_t(t) * num_points, std::size_t(num_points)};
  }
  std::span<const std::uint8_t> frame_visibility(int t) const {
    return {visibility.data() + std::size_t(t) * num_points, std::size_t(num_points)};
  }

  /// T ≥ 2, P ≥ 3, buffer sizes consistent, timestamps strictly increasing.
  void validate() const;
};

struct DetectionBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;  ///< pixels
  double confidence = 0;
  int frame_index = 0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
};

struct SegmentationMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  ///< row-major, nonzero = object
  std::string label;

  bool at(int u, int v) const { return mask[std::size_t(v) * width + u] != 0; }
};

/// Axis-aligned pixel rectangle with exclusive max corner.
struct PixelRect {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

double rect_iou(const PixelRect &a, const PixelRect &b);
/// Tight rectangle of the mask's set pixels; nullopt for an empty mask.
std::optional<PixelRect> tight_rect(const SegmentationMask &mask);

struct MaskSelection {
  std::size_t index = 0;
  double iou = 0.0;
  double confidence = 0.0;
};

/// Picks the candidate whose tight rectangle best overlaps the most confident
/// detection (frame-0 detections preferred). Throws LowConfidenceError when
/// there is no detection at or above `min_confidence`.
MaskSelection select_object_mask(std::span<const SegmentationMask> candidates,
                                 std::span<const DetectionBox> detections,
                                 double min_confidence = kMinDetectionConfidence);

/// Maps every frame's points into frame 0: positions[k][p] ← extrinsics[k](positions[k][p]).
TrackSet project_tracks(const TrackSet &tracks, std::span<const RigidTransform> extrinsics);

/// Kabsch rotation taking frame-0 points onto frame-t points, using only
/// entries flagged in `mutual_visibility`.
Mat3 kabsch_rotation(std::span<const Vec3> cloud0, std::span<const Vec3> cloud_t,
                     std::span<const std::uint8_t> mutual_visibility);
RotationVector extract_rotation(std::span<const Vec3> cloud0, std::span<const Vec3> cloud_t,
                                std::span<const std::uint8_t> mutual_visibility);

Vec3 extract_position(std::span<const Vec3> cloud_t, std::span<const std::uint8_t> visibility);

/// PCA-oriented box; thin axes are floored to kMinBoxExtent.
OrientedBox3D min_bounding_box(std::span<const Vec3> points);

/// Candidate among {r, r ± 2π r̂} closest to `previous`.
RotationVector unwrap_rotation(const RotationVector &r, const RotationVector &previous);

ObjectTrajectory assemble_trajectory(const TrackSet &projected, std::string action,
                                     std::string object_name);

enum class RejectReason {
  kLowConfidence,
  kRegistrationFailure,
  kDegenerateGeometry,
  kOutOfFrame,
  kNonFinite,
  kNonRigid,
  kInputError,
};

std::string_view to_string(RejectReason reason);
std::optional<RejectReason> reject_reason_from_string(std::string_view s);

struct CurationResult {
  bool accepted = true;
  std::optional<RejectReason> reason;
  std::string detail;
};

/// Rejects trajectories with non-finite values or any centroid outside the
/// image or at z ≤ 0.
CurationResult curate(const ObjectTrajectory &trajectory, const CameraIntrinsics &intrinsics);

}  // namespace trajex::extraction
