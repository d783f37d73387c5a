#include <string>

#include "trajex/registration.hpp"

namespace trajex::registration {

void PairwiseConfig::validate() const {
  if (!(voxel_size > 0.0)) throw InputError("config: voxel_size must be > 0");
  if (!(fpfh_radius > 0.0)) throw InputError("config: fpfh_radius must be > 0");
  if (fpfh_max_neighbors <= 0) throw InputError("config: fpfh_max_neighbors must be > 0");
  if (normal_neighbors < 2) throw InputError("config: normal_neighbors must be >= 2");
  if (min_valid_points < 3) throw InputError("config: min_valid_points must be >= 3");
  ransac.validate();
  icp.validate();
}

PreparedFrame prepare_frame(const RgbdFrame &frame, const CameraIntrinsics &intrinsics,
                            const PairwiseConfig &config, int frame_index) {
  const PointCloud raw = backproject(frame.depth, intrinsics, frame.color);
  if (raw.size() < std::size_t(config.min_valid_points))
    throw RegistrationError("frame " + std::to_string(frame_index) + ": only " +
                                std::to_string(raw.size()) + " valid depth points",
                            RigidTransform::identity(), frame_index);
  const PointCloud down = voxel_downsample(raw, config.voxel_size);
  if (down.size() < std::size_t(config.normal_neighbors) + 1)
    throw RegistrationError("frame " + std::to_string(frame_index) +
                                ": too few points after downsampling",
                            RigidTransform::identity(), frame_index);
  PreparedFrame out;
  out.cloud = estimate_normals(down, config.normal_neighbors);
  out.fpfh = compute_fpfh(out.cloud, config.fpfh_radius, config.fpfh_max_neighbors);
  return out;
}

RegistrationResult register_prepared(const PreparedFrame &source, const PreparedFrame &target,
                                     const PairwiseConfig &config, std::uint64_t seed,
                                     int frame_index) {
  try {
    const RegistrationResult coarse = ransac_global_registration(
        source.cloud, target.cloud, source.fpfh, target.fpfh, config.ransac, seed);
    return colored_icp(source.cloud, target.cloud, coarse.transform, config.icp);
  } catch (const RegistrationError &e) {
    throw RegistrationError("pair " + std::to_string(frame_index) + "->" +
                                std::to_string(frame_index + 1) + ": " + e.what(),
                            e.best_effort(), frame_index);
  }
}

RegistrationResult estimate_pairwise_motion(const RgbdFrame &frame_t, const RgbdFrame &frame_t1,
                                            const CameraIntrinsics &intrinsics,
                                            const PairwiseConfig &config, std::uint64_t seed,
                                            int frame_index) {
  config.validate();
  // frame_t1 is the source, frame_t the target.
  const PreparedFrame target = prepare_frame(frame_t, intrinsics, config, frame_index);
  const PreparedFrame source = prepare_frame(frame_t1, intrinsics, config, frame_index + 1);
  return register_prepared(source, target, config, seed, frame_index);
}

std::vector<RigidTransform> chain_extrinsics(std::span<const RigidTransform> pairwise) {
  std::vector<RigidTransform> out;
  out.reserve(pairwise.size() + 1);
  out.push_back(RigidTransform::identity());
  for (const auto &p : pairwise) out.push_back(compose(out.back(), p));
  return out;
}

}  // namespace trajex::registration
