#include "trajex/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "trajex/error.hpp"
#include "trajex/kdtree.hpp"

namespace trajex {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw InputError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InputError("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw InputError("intrinsics: principal point outside image");
}

void ColorImage::set(int u, int v, const Vec3 &c) {
  const std::size_t i = (std::size_t(v) * width + u) * 3;
  for (int k = 0; k < 3; ++k)
    rgb[i + k] = static_cast<std::uint8_t>(std::lround(std::clamp(c[k], 0.0, 1.0) * 255.0));
}

RigidTransform RigidTransform::from_matrix(const Mat4 &m) {
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool RigidTransform::is_valid(double tol) const {
  return is_rotation(rotation, tol) && translation.allFinite();
}

RigidTransform compose(const RigidTransform &a, const RigidTransform &b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RigidTransform invert(const RigidTransform &t) {
  RigidTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

bool is_rotation(const Mat3 &r, double tol) {
  if (!r.allFinite()) return false;
  const Mat3 e = r.transpose() * r - Mat3::Identity();
  return e.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

namespace {

Mat3 skew(const Vec3 &v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Orthonormality tolerance for matrices handed in from outside. Looser than
// the 1e-9 the library guarantees on its own outputs to admit float32 I/O.
constexpr double kRotationInputTol = 1e-6;

}  // namespace

Mat3 rotvec_to_matrix(const RotationVector &r) {
  const double theta = r.angle();
  const Mat3 k = skew(r.value);
  double a, b;  // sin(θ)/θ and (1 - cos θ)/θ²
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * k + b * k * k;
}

RotationVector matrix_to_rotvec(const Mat3 &r) {
  if (!is_rotation(r, kRotationInputTol))
    throw InputError("matrix_to_rotvec: matrix is not a proper rotation");

  // v = sin(θ) · axis
  const Vec3 v = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = v.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (c > -0.5) {
    // θ < 2π/3: the antisymmetric part is well conditioned.
    double scale;
    if (s < 1e-8) {
      scale = 1.0 + s * s / 6.0;  // θ/sin θ
    } else {
      scale = theta / s;
    }
    return RotationVector(v * scale);
  }

  // Near π the symmetric part carries the axis: (R + Rᵀ)/2 - cos θ · I = (1 - cos θ) a aᵀ.
  const Mat3 b = 0.5 * (r + r.transpose()) - c * Mat3::Identity();
  int col = 0;
  b.diagonal().maxCoeff(&col);
  Vec3 axis = b.col(col).normalized();

  if (s > 1e-12) {
    if (axis.dot(v) < 0.0) axis = -axis;
    return RotationVector(axis * theta);
  }
  // Exactly π: pick the axis whose first nonzero component is positive.
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > 1e-12) {
      if (axis[i] < 0.0) axis = -axis;
      break;
    }
  }
  return RotationVector(axis * std::numbers::pi);
}

void PointCloud::validate() const {
  if (has_colors() && colors.size() != points.size())
    throw InputError("point cloud: colors length differs from points");
  if (has_normals() && normals.size() != points.size())
    throw InputError("point cloud: normals length differs from points");
  for (const auto &n : normals)
    if (!(std::abs(n.norm() - 1.0) <= 1e-6)) throw InputError("point cloud: normal is not unit length");
}

PointCloud PointCloud::transformed(const RigidTransform &t) const {
  PointCloud out;
  out.points.reserve(points.size());
  for (const auto &p : points) out.points.push_back(t(p));
  out.colors = colors;
  if (has_normals()) {
    out.normals.reserve(normals.size());
    for (const auto &n : normals) out.normals.push_back(t.rotation * n);
  }
  return out;
}

namespace {

PointCloud backproject_impl(const DepthImage &depth, const CameraIntrinsics &k,
                            const ColorImage *colors) {
  k.validate();
  if (depth.width != k.width || depth.height != k.height)
    throw InputError("backproject: depth size " + std::to_string(depth.width) + "x" +
                     std::to_string(depth.height) + " does not match intrinsics");
  if (depth.values.size() != std::size_t(depth.width) * depth.height)
    throw InputError("backproject: depth buffer has wrong length");
  if (colors && (colors->width != k.width || colors->height != k.height))
    throw InputError("backproject: color image size does not match intrinsics");

  PointCloud cloud;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const float d = depth.at(u, v);
      if (!DepthImage::valid(d)) continue;
      cloud.points.push_back(k.unproject(u, v, d));
      if (colors) cloud.colors.push_back(colors->at(u, v));
    }
  }
  return cloud;
}

}  // namespace

PointCloud backproject(const DepthImage &depth, const CameraIntrinsics &intrinsics) {
  return backproject_impl(depth, intrinsics, nullptr);
}

PointCloud backproject(const DepthImage &depth, const CameraIntrinsics &intrinsics,
                       const ColorImage &colors) {
  return backproject_impl(depth, intrinsics, &colors);
}

PointCloud estimate_normals(const PointCloud &cloud, int k) {
  cloud.validate();
  if (k < 2) throw InputError("estimate_normals: k must be at least 2");
  if (cloud.size() < std::size_t(k) + 1)
    throw InputError("estimate_normals: need at least k+1 points");

  const KdTree3 tree = make_kdtree(cloud.points);
  PointCloud out = cloud;
  out.normals.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 &p = cloud.points[i];
    const auto nbrs = tree.knn(p.data(), k + 1);
    Vec3 mean = Vec3::Zero();
    for (const auto &nb : nbrs) mean += cloud.points[nb.index];
    mean /= double(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto &nb : nbrs) {
      const Vec3 d = cloud.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    Vec3 n = es.eigenvectors().col(0);  // ascending eigenvalues
    if (n.dot(-p) < 0.0) n = -n;
    out.normals[i] = n.normalized();
  }
  return out;
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey &) const = default;
  bool operator<(const VoxelKey &o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey &k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointCloud voxel_downsample(const PointCloud &cloud, double voxel) {
  if (!(voxel > 0.0)) throw InputError("voxel_downsample: voxel size must be positive");
  cloud.validate();

  struct Acc {
    Vec3 p = Vec3::Zero(), c = Vec3::Zero(), n = Vec3::Zero();
    int count = 0;
  };
  std::unordered_map<VoxelKey, Acc, VoxelKeyHash> cells;
  cells.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 &p = cloud.points[i];
    const VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                       static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                       static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    Acc &a = cells[key];
    a.p += p;
    if (cloud.has_colors()) a.c += cloud.colors[i];
    if (cloud.has_normals()) a.n += cloud.normals[i];
    ++a.count;
  }

  std::vector<std::pair<VoxelKey, const Acc *>> ordered;
  ordered.reserve(cells.size());
  for (const auto &[key, acc] : cells) ordered.emplace_back(key, &acc);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });

  PointCloud out;
  out.points.reserve(ordered.size());
  for (const auto &[key, acc] : ordered) {
    const double inv = 1.0 / acc->count;
    out.points.push_back(acc->p * inv);
    if (cloud.has_colors()) out.colors.push_back(acc->c * inv);
    if (cloud.has_normals()) {
      const double len = acc->n.norm();
      // Opposing normals cancel to zero; default to facing the camera.
      out.normals.push_back(len > 1e-12 ? Vec3(acc->n / len) : Vec3(0, 0, -1));
    }
  }
  return out;
}

Vec3 centroid(std::span<const Vec3> points) {
  Vec3 c = Vec3::Zero();
  for (const auto &p : points) c += p;
  return points.empty() ? c : Vec3(c / double(points.size()));
}

RigidTransform fit_rigid_transform(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.size() < 3)
    throw InputError("fit_rigid_transform: need >= 3 paired points");
  const Vec3 cs = centroid(src);
  const Vec3 cd = centroid(dst);
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 v = svd.matrixV();
  const Mat3 &u = svd.matrixU();
  Mat3 r = v * u.transpose();
  if (r.determinant() < 0.0) {
    v.col(2) = -v.col(2);
    r = v * u.transpose();
  }
  RigidTransform t;
  t.rotation = r;
  t.translation = cd - r * cs;
  return t;
}

}  // namespace trajex
