#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "trajex/kdtree.hpp"
#include "trajex/registration.hpp"

namespace trajex::registration {

void IcpParams::validate() const {
  if (!(distance_threshold > 0.0)) throw InputError("icp: distance threshold must be > 0");
  if (max_iterations <= 0) throw InputError("icp: max iterations must be > 0");
  if (!(relative_fitness > 0.0) || !(relative_rmse > 0.0))
    throw InputError("icp: convergence tolerances must be > 0");
  if (!(color_weight >= 0.0 && color_weight <= 1.0))
    throw InputError("icp: color weight must be in [0, 1]");
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

double intensity(const Vec3 &c) { return (c.x() + c.y() + c.z()) / 3.0; }

// Intensity gradient on each target point's tangent plane, fitted to its
// neighbors with an extra row forcing the gradient orthogonal to the normal.
std::vector<Vec3> color_gradients(const PointCloud &target, const KdTree3 &tree, double radius,
                                  int max_nn) {
  std::vector<Vec3> grads(target.size(), Vec3::Zero());
  for (std::size_t k = 0; k < target.size(); ++k) {
    const Vec3 &p = target.points[k];
    const Vec3 &n = target.normals[k];
    const auto nbrs = tree.radius(p.data(), radius, max_nn);
    if (nbrs.size() < 3) continue;
    const double it = intensity(target.colors[k]);
    Mat3 ata = Mat3::Zero();
    Vec3 atb = Vec3::Zero();
    int rows = 0;
    for (const auto &nb : nbrs) {
      if (std::size_t(nb.index) == k) continue;
      const Vec3 &q = target.points[nb.index];
      const Vec3 proj = q - (q - p).dot(n) * n;
      const Vec3 a = proj - p;
      const double b = intensity(target.colors[nb.index]) - it;
      ata += a * a.transpose();
      atb += a * b;
      ++rows;
    }
    const Vec3 a = double(rows) * n;
    ata += a * a.transpose();
    // Neighbors on a line leave one tangent direction unconstrained; solve in
    // the well-conditioned eigen-directions only.
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(ata);
    const Vec3 ev = es.eigenvalues();
    const Vec3 proj_b = es.eigenvectors().transpose() * atb;
    Vec3 y = Vec3::Zero();
    for (int i = 0; i < 3; ++i)
      if (ev[i] > 1e-6 * ev[2]) y[i] = proj_b[i] / ev[i];
    const Vec3 g = es.eigenvectors() * y;
    if (g.allFinite()) grads[k] = g;
  }
  return grads;
}

struct Correspondences {
  std::vector<std::pair<int, int>> pairs;
  double fitness = 0.0;
  double rmse = 0.0;
};

Correspondences find_correspondences(const std::vector<Vec3> &moved, const KdTree3 &tree,
                                     double max_distance) {
  Correspondences c;
  const double max2 = max_distance * max_distance;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    const Neighbor nb = tree.nearest(moved[i].data());
    if (nb.index >= 0 && nb.dist2 <= max2) {
      c.pairs.emplace_back(static_cast<int>(i), nb.index);
      sum2 += nb.dist2;
    }
  }
  if (!moved.empty()) c.fitness = double(c.pairs.size()) / double(moved.size());
  if (!c.pairs.empty()) c.rmse = std::sqrt(sum2 / double(c.pairs.size()));
  return c;
}

std::vector<Vec3> transform_points(const RigidTransform &t, const std::vector<Vec3> &pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto &p : pts) out.push_back(t(p));
  return out;
}

RigidTransform from_twist(const Vec6 &x) {
  RigidTransform t;
  t.rotation = (Eigen::AngleAxisd(x(2), Vec3::UnitZ()) * Eigen::AngleAxisd(x(1), Vec3::UnitY()) *
                Eigen::AngleAxisd(x(0), Vec3::UnitX()))
                   .toRotationMatrix();
  t.translation = x.tail<3>();
  return t;
}

/// Point-to-plane RMSE of a fixed correspondence set under `t`.
double plane_rmse(const RigidTransform &t, const std::vector<std::pair<int, int>> &pairs,
                  const PointCloud &source, const PointCloud &target) {
  if (pairs.empty()) return 0.0;
  double sum2 = 0.0;
  for (const auto &[i, j] : pairs) {
    const double r = (t(source.points[i]) - target.points[j]).dot(target.normals[j]);
    sum2 += r * r;
  }
  return std::sqrt(sum2 / double(pairs.size()));
}

}  // namespace

RegistrationResult colored_icp(const PointCloud &source, const PointCloud &target,
                               const RigidTransform &init, const IcpParams &params) {
  params.validate();
  source.validate();
  target.validate();
  if (!source.has_colors() || !source.has_normals() || !target.has_colors() ||
      !target.has_normals())
    throw InputError("colored_icp: both clouds need colors and normals");

  const KdTree3 tree = make_kdtree(target.points);
  const std::vector<Vec3> grads =
      color_gradients(target, tree, 2.0 * params.distance_threshold, 30);

  const double sqrt_geo = std::sqrt(params.color_weight);
  const double sqrt_photo = std::sqrt(1.0 - params.color_weight);

  RigidTransform transform = init;
  std::vector<Vec3> moved = transform_points(transform, source.points);
  Correspondences corr = find_correspondences(moved, tree, params.distance_threshold);
  if (corr.pairs.empty())
    throw RegistrationError("colored_icp: no correspondences within threshold", init);
  // Latest iterate whose correspondence set has no larger point-to-plane
  // RMSE under it than under init; init itself trivially qualifies.
  const Correspondences initial = corr;
  RigidTransform accepted = init;
  Correspondences accepted_corr = corr;

  int it = 0;
  for (; it < params.max_iterations; ++it) {
    Mat6 jtj = Mat6::Zero();
    Vec6 jtr = Vec6::Zero();
    for (const auto &[cs, ct] : corr.pairs) {
      const Vec3 &vs = moved[cs];
      const Vec3 &vt = target.points[ct];
      const Vec3 &nt = target.normals[ct];

      Vec6 j_geo;
      j_geo << vs.cross(nt), nt;
      j_geo *= sqrt_geo;
      const double r_geo = sqrt_geo * (vs - vt).dot(nt);

      const Vec3 vs_proj = vs - (vs - vt).dot(nt) * nt;
      const double is = intensity(source.colors[cs]);
      const double it_c = intensity(target.colors[ct]);
      const Vec3 &dit = grads[ct];
      const double is0_proj = dit.dot(vs_proj - vt) + it_c;
      const Mat3 m = Mat3::Identity() - nt * nt.transpose();
      const Vec3 ditm = -(m * dit);
      Vec6 j_photo;
      j_photo << vs.cross(ditm), ditm;
      j_photo *= sqrt_photo;
      const double r_photo = sqrt_photo * (is - is0_proj);

      jtj.noalias() += j_geo * j_geo.transpose() + j_photo * j_photo.transpose();
      jtr.noalias() += j_geo * r_geo + j_photo * r_photo;
    }
    Eigen::LDLT<Mat6> ldlt(jtj);
    if (ldlt.info() != Eigen::Success) break;
    const Vec6 x = ldlt.solve(-jtr);
    if (!x.allFinite()) break;

    const RigidTransform update = from_twist(x);
    transform = compose(update, transform);
    for (auto &p : moved) p = update(p);

    const Correspondences previous = corr;
    corr = find_correspondences(moved, tree, params.distance_threshold);
    if (corr.pairs.empty())
      throw RegistrationError("colored_icp: lost all correspondences", accepted);
    if (plane_rmse(transform, corr.pairs, source, target) <=
        plane_rmse(init, corr.pairs, source, target)) {
      accepted = transform;
      accepted_corr = corr;
    }
    if (std::abs(previous.fitness - corr.fitness) < params.relative_fitness &&
        std::abs(previous.rmse - corr.rmse) < params.relative_rmse) {
      ++it;
      break;
    }
  }

  RegistrationResult result;
  result.transform = accepted;
  result.fitness = accepted_corr.fitness;
  result.inlier_rmse = accepted_corr.rmse;
  // Never report something init beats on both fitness and RMSE.
  if (initial.fitness >= result.fitness && initial.rmse <= result.inlier_rmse) {
    result.transform = init;
    result.fitness = initial.fitness;
    result.inlier_rmse = initial.rmse;
  }
  result.iterations = it;
  return result;
}

}  // namespace trajex::registration
