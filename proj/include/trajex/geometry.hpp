#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace trajex {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Pinhole intrinsics. Pixel coordinates are (u, v) = (column, row).
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InputError when focal lengths or the principal point are invalid.
  void validate() const;

  Vec2 project(const Vec3 &p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
  Vec3 unproject(double u, double v, double depth) const {
    return {depth * (u - cx) / fx, depth * (v - cy) / fy, depth};
  }
  bool contains(const Vec2 &px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
  }

  bool operator==(const CameraIntrinsics &) const = default;
};

/// Row-major depth in meters. Zero or non-finite means no depth.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), values(std::size_t(w) * h, 0.f) {}

  float &at(int u, int v) { return values[std::size_t(v) * width + u]; }
  float at(int u, int v) const { return values[std::size_t(v) * width + u]; }
  static bool valid(float d) { return std::isfinite(d) && d > 0.f; }
};

/// Row-major interleaved 8-bit RGB.
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  ColorImage() = default;
  ColorImage(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}

  Vec3 at(int u, int v) const {
    const std::size_t i = (std::size_t(v) * width + u) * 3;
    return Vec3(rgb[i], rgb[i + 1], rgb[i + 2]) / 255.0;
  }
  void set(int u, int v, const Vec3 &c);
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Mat4 &m);
  Mat4 matrix() const;

  Vec3 operator()(const Vec3 &x) const { return rotation * x + translation; }

  /// RᵀR = I and det R = 1 within tol.
  bool is_valid(double tol = 1e-9) const;
};

/// (a ∘ b)(x) = a(b(x)).
RigidTransform compose(const RigidTransform &a, const RigidTransform &b);
RigidTransform invert(const RigidTransform &t);
inline RigidTransform operator*(const RigidTransform &a, const RigidTransform &b) {
  return compose(a, b);
}

/// Axis-angle vector, angle in radians.
struct RotationVector {
  Vec3 value = Vec3::Zero();

  RotationVector() = default;
  explicit RotationVector(const Vec3 &v) : value(v) {}
  RotationVector(double x, double y, double z) : value(x, y, z) {}
  double angle() const { return value.norm(); }
};

bool is_rotation(const Mat3 &r, double tol = 1e-9);
Mat3 rotvec_to_matrix(const RotationVector &r);
/// Returns the canonical vector: angle in [0, π]; at exactly π the axis has a
/// positive first nonzero component. Throws InputError for non-rotations.
RotationVector matrix_to_rotvec(const Mat3 &r);

/// Colored point set with optional parallel normals.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;   ///< RGB in [0,1]
  std::vector<Vec3> normals;  ///< unit length

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty(); }
  bool has_normals() const { return !normals.empty(); }

  void validate() const;
  PointCloud transformed(const RigidTransform &t) const;
};

/// One point per valid-depth pixel: d · K⁻¹ · [u, v, 1]ᵀ.
PointCloud backproject(const DepthImage &depth, const CameraIntrinsics &intrinsics);
PointCloud backproject(const DepthImage &depth, const CameraIntrinsics &intrinsics,
                       const ColorImage &colors);

/// Normals from the covariance of each point and its k nearest neighbors,
/// flipped to face the camera origin.
PointCloud estimate_normals(const PointCloud &cloud, int k);

/// Voxel-grid centroid downsampling. Output is ordered by voxel key.
PointCloud voxel_downsample(const PointCloud &cloud, double voxel);

/// Least-squares rigid transform mapping src onto dst (centered Kabsch with
/// proper-rotation correction). Requires src.size() == dst.size() >= 3.
RigidTransform fit_rigid_transform(std::span<const Vec3> src, std::span<const Vec3> dst);

Vec3 centroid(std::span<const Vec3> points);

}  // namespace trajex
