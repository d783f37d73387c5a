#include <cmath>
#include <limits>
#include <random>

#include "trajex/kdtree.hpp"
#include "trajex/registration.hpp"

namespace trajex::registration {

void RansacParams::validate() const {
  if (!(distance_threshold > 0.0)) throw InputError("ransac: distance threshold must be > 0");
  if (max_iterations <= 0) throw InputError("ransac: max iterations must be > 0");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw InputError("ransac: confidence must be in (0, 1)");
  if (!(edge_length_ratio > 0.0 && edge_length_ratio <= 1.0))
    throw InputError("ransac: edge length ratio must be in (0, 1]");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RegistrationResult evaluate_registration(const PointCloud &source, const PointCloud &target,
                                         const RigidTransform &transform, double max_distance) {
  RegistrationResult result;
  result.transform = transform;
  if (source.empty() || target.empty()) return result;
  const KdTree3 tree = make_kdtree(target.points);
  const double max2 = max_distance * max_distance;
  std::size_t inliers = 0;
  double sum2 = 0.0;
  for (const auto &p : source.points) {
    const Vec3 q = transform(p);
    const Neighbor nb = tree.nearest(q.data());
    if (nb.index >= 0 && nb.dist2 <= max2) {
      ++inliers;
      sum2 += nb.dist2;
    }
  }
  result.fitness = double(inliers) / double(source.size());
  result.inlier_rmse = inliers ? std::sqrt(sum2 / double(inliers)) : 0.0;
  return result;
}

namespace {

struct Hypothesis {
  RigidTransform transform;
  std::size_t inliers = 0;
  double sum2 = std::numeric_limits<double>::infinity();
};

Hypothesis score(const RigidTransform &t, std::span<const Vec3> src, std::span<const Vec3> dst,
                 double max2) {
  Hypothesis h;
  h.transform = t;
  h.sum2 = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double d2 = (t(src[i]) - dst[i]).squaredNorm();
    if (d2 <= max2) {
      ++h.inliers;
      h.sum2 += d2;
    }
  }
  return h;
}

bool better(const Hypothesis &a, const Hypothesis &b) {
  return a.inliers > b.inliers || (a.inliers == b.inliers && a.sum2 < b.sum2);
}

}  // namespace

RegistrationResult ransac_global_registration(const PointCloud &source, const PointCloud &target,
                                              std::span<const FpfhDescriptor> source_fpfh,
                                              std::span<const FpfhDescriptor> target_fpfh,
                                              const RansacParams &params, std::uint64_t seed) {
  params.validate();
  if (source.empty() || target.empty())
    throw RegistrationError("ransac: empty point cloud");
  if (source_fpfh.size() != source.size() || target_fpfh.size() != target.size())
    throw InputError("ransac: descriptor count differs from point count");

  const auto matches = mutual_feature_matches(source_fpfh, target_fpfh);
  if (matches.size() < 3)
    throw RegistrationError("ransac: fewer than 3 feature correspondences");

  std::vector<Vec3> src, dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const auto &[s, t] : matches) {
    src.push_back(source.points[s]);
    dst.push_back(target.points[t]);
  }

  const double max2 = params.distance_threshold * params.distance_threshold;
  const double ratio = params.edge_length_ratio;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, src.size() - 1);

  Hypothesis best;
  best.sum2 = std::numeric_limits<double>::infinity();
  bool found = false;
  double needed = params.max_iterations;
  int it = 0;
  for (; it < params.max_iterations && it < needed; ++it) {
    std::size_t idx[3];
    idx[0] = pick(rng);
    do idx[1] = pick(rng); while (idx[1] == idx[0]);
    do idx[2] = pick(rng); while (idx[2] == idx[0] || idx[2] == idx[1]);

    bool consistent = true;
    for (int a = 0; a < 3 && consistent; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        const double ls = (src[idx[a]] - src[idx[b]]).norm();
        const double lt = (dst[idx[a]] - dst[idx[b]]).norm();
        if (std::min(ls, lt) < ratio * std::max(ls, lt)) {
          consistent = false;
          break;
        }
      }
    }
    if (!consistent) continue;

    const Vec3 s3[3] = {src[idx[0]], src[idx[1]], src[idx[2]]};
    const Vec3 d3[3] = {dst[idx[0]], dst[idx[1]], dst[idx[2]]};
    const RigidTransform t = fit_rigid_transform(s3, d3);
    const Hypothesis h = score(t, src, dst, max2);
    if (h.inliers >= 3 && (!found || better(h, best))) {
      best = h;
      found = true;
      const double w = double(best.inliers) / double(src.size());
      if (w >= 1.0) {
        needed = 0;
      } else {
        needed = std::log(1.0 - params.confidence) / std::log(1.0 - w * w * w);
      }
    }
  }
  if (!found) throw RegistrationError("ransac: no consistent hypothesis found");

  // Refit on the winning consensus set.
  std::vector<Vec3> in_src, in_dst;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if ((best.transform(src[i]) - dst[i]).squaredNorm() <= max2) {
      in_src.push_back(src[i]);
      in_dst.push_back(dst[i]);
    }
  }
  const Hypothesis refit = score(fit_rigid_transform(in_src, in_dst), src, dst, max2);
  if (!better(best, refit)) best = refit;

  RegistrationResult result =
      evaluate_registration(source, target, best.transform, params.distance_threshold);
  result.iterations = it;
  return result;
}

}  // namespace trajex::registration
