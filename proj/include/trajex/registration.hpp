#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trajex/error.hpp"
#include "trajex/geometry.hpp"

namespace trajex::registration {

inline constexpr int kFpfhBinsPerFeature = 11;
inline constexpr int kFpfhSize = 3 * kFpfhBinsPerFeature;

/// 33-bin Fast Point Feature Histogram: α, φ, θ blocks of 11 bins each.
struct FpfhDescriptor {
  std::array<double, kFpfhSize> histogram{};
};

struct RansacParams {
  double distance_threshold = 0.03;
  int max_iterations = 100000;
  double confidence = 0.999;
  /// Sampled edges must agree in length within this ratio in both clouds.
  double edge_length_ratio = 0.9;

  void validate() const;
};

struct IcpParams {
  double distance_threshold = 0.008;
  int max_iterations = 100;
  double relative_fitness = 1e-6;
  double relative_rmse = 1e-6;
  /// Weight of the point-to-plane term; the color term gets 1 - color_weight.
  double color_weight = 0.968;

  void validate() const;
};

struct RegistrationResult {
  RigidTransform transform;
  double fitness = 0.0;      ///< inlier fraction of source points
  double inlier_rmse = 0.0;  ///< meters
  int iterations = 0;
};

/// Registration could not produce a transform. Carries the best estimate
/// available when the failure happened.
class RegistrationError : public Error {
 public:
  RegistrationError(const std::string &what, RigidTransform best_effort = {},
                    int frame_index = -1)
      : Error(what), best_effort_(best_effort), frame_index_(frame_index) {}
  const RigidTransform &best_effort() const { return best_effort_; }
  int frame_index() const { return frame_index_; }

 private:
  RigidTransform best_effort_;
  int frame_index_;
};

/// Requires normals. Points with fewer than one neighbor inside `radius`
/// get an all-zero histogram.
std::vector<FpfhDescriptor> compute_fpfh(const PointCloud &cloud, double radius,
                                         int max_neighbors = 100);

/// Indices (source, target) of descriptors that are each other's nearest
/// neighbor in feature space, ordered by source index.
std::vector<std::pair<int, int>> mutual_feature_matches(
    std::span<const FpfhDescriptor> source, std::span<const FpfhDescriptor> target);

/// Fitness and inlier RMSE of `transform` applied to source, using
/// nearest-neighbor correspondences within `max_distance`.
RegistrationResult evaluate_registration(const PointCloud &source, const PointCloud &target,
                                         const RigidTransform &transform,
                                         double max_distance);

RegistrationResult ransac_global_registration(const PointCloud &source,
                                              const PointCloud &target,
                                              std::span<const FpfhDescriptor> source_fpfh,
                                              std::span<const FpfhDescriptor> target_fpfh,
                                              const RansacParams &params,
                                              std::uint64_t seed = 0);

/// Joint photometric / point-to-plane ICP. Both clouds need colors and
/// normals. The returned transform maps source into target and already
/// includes `init`.
RegistrationResult colored_icp(const PointCloud &source, const PointCloud &target,
                               const RigidTransform &init, const IcpParams &params);

struct RgbdFrame {
  DepthImage depth;
  ColorImage color;
};

struct PairwiseConfig {
  double voxel_size = 0.01;
  double fpfh_radius = 0.05;
  int fpfh_max_neighbors = 100;
  int normal_neighbors = 20;
  int min_valid_points = 100;
  RansacParams ransac;
  IcpParams icp;

  void validate() const;
};

/// Downsampled cloud with normals and FPFH, ready for registration.
struct PreparedFrame {
  PointCloud cloud;
  std::vector<FpfhDescriptor> fpfh;
};

/// Back-projects, downsamples and describes one frame. Throws
/// RegistrationError when too few valid depth pixels remain.
PreparedFrame prepare_frame(const RgbdFrame &frame, const CameraIntrinsics &intrinsics,
                            const PairwiseConfig &config, int frame_index = -1);

/// RANSAC on FPFH matches followed by colored ICP; maps source into target.
RegistrationResult register_prepared(const PreparedFrame &source, const PreparedFrame &target,
                                     const PairwiseConfig &config, std::uint64_t seed,
                                     int frame_index = -1);

/// Transform mapping frame_t1 camera coordinates into frame_t coordinates.
/// Throws RegistrationError tagged with `frame_index` on failure.
RegistrationResult estimate_pairwise_motion(const RgbdFrame &frame_t, const RgbdFrame &frame_t1,
                                            const CameraIntrinsics &intrinsics,
                                            const PairwiseConfig &config, std::uint64_t seed,
                                            int frame_index = -1);

/// output[0] = identity, output[k] = output[k-1] ∘ pairwise[k-1]; output[k]
/// maps frame-k coordinates into frame-0 coordinates.
std::vector<RigidTransform> chain_extrinsics(std::span<const RigidTransform> pairwise);

/// Independent per-pair seed derived from a base seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace trajex::registration
