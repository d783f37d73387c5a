#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajex/trajectory.hpp"

namespace trajex::metrics {

enum class Space { k3D, k2D };

struct TrajectoryPair {
  std::vector<Pose> predicted;
  std::vector<Pose> reference;
  std::optional<CameraIntrinsics> intrinsics;  ///< needed for 2D metrics
};

/// Truncates, or repeats the final pose, to reach `reference_len`.
std::vector<Pose> normalize_length(std::span<const Pose> predicted, std::size_t reference_len);

/// Mean per-step L2 position error. 2D projects both centroids and divides
/// pixel coordinates by (width, height). Lengths must already match.
double ade(const TrajectoryPair &pair, Space space = Space::k3D);
double fde(const TrajectoryPair &pair, Space space = Space::k3D);

/// arccos((tr(R_refᵀ R_pred) - 1) / 2) with the argument clamped to [-1, 1].
double geodesic_distance(const RotationVector &predicted, const RotationVector &reference);
/// Per-timestep mean of geodesic_distance.
double mean_geodesic_distance(std::span<const Pose> predicted, std::span<const Pose> reference);

struct PairMetrics {
  double ade3d = 0.0;
  double fde3d = 0.0;
  std::optional<double> ade2d;  ///< absent without intrinsics or with z ≤ 0
  std::optional<double> fde2d;
  double gd = 0.0;
  std::size_t chosen_sample = 0;  ///< best-of-K index
};

/// Metrics for one pair after length normalization.
PairMetrics evaluate_pair(const TrajectoryPair &pair);

/// One reference with K ≥ 1 sampled predictions.
struct SampledInstance {
  std::string id;
  std::vector<std::vector<Pose>> samples;
  std::vector<Pose> reference;
  std::optional<CameraIntrinsics> intrinsics;
};

struct Report {
  std::vector<std::string> ids;
  std::vector<PairMetrics> per_pair;
  PairMetrics mean;
  std::size_t count_2d = 0;  ///< pairs contributing to the 2D means
};

Report evaluate_batch(std::span<const TrajectoryPair> pairs);
/// Per instance, keeps the sample with the lowest ADE(3D).
Report evaluate_best_of(std::span<const SampledInstance> instances);

/// Aligned plain-text table: ADE3D FDE3D ADE2D FDE2D GD.
std::string format_table(const Report &report);

}  // namespace trajex::metrics
