#include <cmath>
#include <numbers>

#include "trajex/kdtree.hpp"
#include "trajex/registration.hpp"

namespace trajex::registration {

namespace {

using Histogram = std::array<double, kFpfhSize>;

// Darboux-frame angles (α, φ, θ) for an oriented point pair. Returns false
// when the frame is undefined (coincident points or normal parallel to the
// connecting line).
bool pair_features(const Vec3 &p1, const Vec3 &n1, const Vec3 &p2, const Vec3 &n2,
                   double &alpha, double &phi, double &theta) {
  Vec3 dp = p2 - p1;
  const double len = dp.norm();
  if (len == 0.0) return false;

  Vec3 source_n = n1, target_n = n2;
  const double angle1 = n1.dot(dp) / len;
  const double angle2 = n2.dot(dp) / len;
  // The source point is the one whose normal makes the smaller angle with dp.
  if (std::acos(std::abs(angle1)) > std::acos(std::abs(angle2))) {
    source_n = n2;
    target_n = n1;
    dp = -dp;
    phi = -angle2;
  } else {
    phi = angle1;
  }

  Vec3 v = dp.cross(source_n);
  const double v_norm = v.norm();
  if (v_norm == 0.0) return false;
  v /= v_norm;
  const Vec3 w = source_n.cross(v);
  theta = v.dot(target_n);
  alpha = std::atan2(w.dot(target_n), source_n.dot(target_n));
  return true;
}

int bin_of(double value, double lo, double hi) {
  const int b = static_cast<int>(std::floor(kFpfhBinsPerFeature * (value - lo) / (hi - lo)));
  return std::clamp(b, 0, kFpfhBinsPerFeature - 1);
}

}  // namespace

std::vector<FpfhDescriptor> compute_fpfh(const PointCloud &cloud, double radius,
                                         int max_neighbors) {
  if (!cloud.has_normals()) throw InputError("compute_fpfh: cloud has no normals");
  if (!(radius > 0.0)) throw InputError("compute_fpfh: radius must be positive");
  cloud.validate();

  const std::size_t n = cloud.size();
  const KdTree3 tree = make_kdtree(cloud.points);

  std::vector<std::vector<Neighbor>> neighborhoods(n);
  std::vector<Histogram> spfh(n, Histogram{});
  for (std::size_t i = 0; i < n; ++i) {
    neighborhoods[i] = tree.radius(cloud.points[i].data(), radius, max_neighbors);
    const auto &nbrs = neighborhoods[i];
    int valid = 0;
    for (const auto &nb : nbrs)
      if (std::size_t(nb.index) != i) ++valid;
    if (valid == 0) continue;
    const double increment = 100.0 / valid;
    for (const auto &nb : nbrs) {
      if (std::size_t(nb.index) == i) continue;
      double alpha = 0, phi = 0, theta = 0;
      if (!pair_features(cloud.points[i], cloud.normals[i], cloud.points[nb.index],
                         cloud.normals[nb.index], alpha, phi, theta))
        continue;
      spfh[i][bin_of(alpha, -std::numbers::pi, std::numbers::pi)] += increment;
      spfh[i][kFpfhBinsPerFeature + bin_of(phi, -1.0, 1.0)] += increment;
      spfh[i][2 * kFpfhBinsPerFeature + bin_of(theta, -1.0, 1.0)] += increment;
    }
  }

  // Weighted neighbor SPFH sum (weight 1/d²), each feature block rescaled to
  // 100, then the point's own SPFH added.
  std::vector<FpfhDescriptor> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto &nbrs = neighborhoods[i];
    Histogram acc{};
    bool any = false;
    for (const auto &nb : nbrs) {
      if (std::size_t(nb.index) == i || nb.dist2 == 0.0) continue;
      const double w = 1.0 / nb.dist2;
      const Histogram &h = spfh[nb.index];
      for (int b = 0; b < kFpfhSize; ++b) acc[b] += h[b] * w;
      any = true;
    }
    Histogram &f = out[i].histogram;
    if (any) {
      for (int block = 0; block < 3; ++block) {
        double sum = 0.0;
        for (int b = 0; b < kFpfhBinsPerFeature; ++b) sum += acc[block * kFpfhBinsPerFeature + b];
        if (sum > 0.0) {
          const double scale = 100.0 / sum;
          for (int b = 0; b < kFpfhBinsPerFeature; ++b)
            f[block * kFpfhBinsPerFeature + b] = acc[block * kFpfhBinsPerFeature + b] * scale;
        }
      }
    }
    for (int b = 0; b < kFpfhSize; ++b) f[b] += spfh[i][b];
  }
  return out;
}

std::vector<std::pair<int, int>> mutual_feature_matches(std::span<const FpfhDescriptor> source,
                                                        std::span<const FpfhDescriptor> target) {
  std::vector<std::pair<int, int>> matches;
  if (source.empty() || target.empty()) return matches;
  auto get = [](const FpfhDescriptor &d) -> const Histogram & { return d.histogram; };
  const auto source_tree = KdTree<kFpfhSize>::from(source, get);
  const auto target_tree = KdTree<kFpfhSize>::from(target, get);

  std::vector<int> target_to_source(target.size(), -2);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const int j = target_tree.nearest(source[i].histogram.data()).index;
    if (j < 0) continue;
    int &back = target_to_source[j];
    if (back == -2) back = source_tree.nearest(target[j].histogram.data()).index;
    if (back == static_cast<int>(i)) matches.emplace_back(static_cast<int>(i), j);
  }
  return matches;
}

}  // namespace trajex::registration
