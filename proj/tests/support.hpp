#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "trajex/geometry.hpp"
#include "trajex/trajectory.hpp"

namespace trajex::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 uniform_vec(Rng &rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Vec3 gaussian_vec(Rng &rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  return {n(rng), n(rng), n(rng)};
}

inline Vec3 unit_vec(Rng &rng) {
  Vec3 v;
  do v = gaussian_vec(rng, 1.0);
  while (v.norm() < 1e-6);
  return v.normalized();
}

/// Unit quaternion (w, x, y, z).
using Quat = std::array<double, 4>;

inline Quat quat_from_axis_angle(const Vec3 &axis, double angle) {
  const double s = std::sin(angle / 2.0);
  return {std::cos(angle / 2.0), axis.x() * s, axis.y() * s, axis.z() * s};
}

inline Quat quat_from_rotvec(const Vec3 &r) {
  const double a = r.norm();
  if (a == 0.0) return {1.0, 0.0, 0.0, 0.0};
  return quat_from_axis_angle(r / a, a);
}

/// Rotation matrix from a unit quaternion, written out term by term.
inline Mat3 quat_to_matrix(const Quat &q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

/// Relative angle 2·acos(|⟨q1, q2⟩|). Evaluated as 4·atan2(|q1 - q2|, |q1 + q2|)
/// after aligning signs, which is the same angle without acos cancellation.
inline double quat_angle(const Quat &a, const Quat &b) {
  double dot = 0.0;
  for (int i = 0; i < 4; ++i) dot += a[i] * b[i];
  const double sign = dot < 0.0 ? -1.0 : 1.0;
  double minus2 = 0.0, plus2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    minus2 += (a[i] - sign * b[i]) * (a[i] - sign * b[i]);
    plus2 += (a[i] + sign * b[i]) * (a[i] + sign * b[i]);
  }
  return 4.0 * std::atan2(std::sqrt(minus2), std::sqrt(plus2));
}

/// Uniform random rotation from a normalized 4D Gaussian.
inline Quat random_quat(Rng &rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q{n(rng), n(rng), n(rng), n(rng)};
  const double len = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (double &c : q) c /= len;
  return q;
}

inline Mat3 random_rotation(Rng &rng) { return quat_to_matrix(random_quat(rng)); }

inline RigidTransform random_transform(Rng &rng, double max_translation = 1.0) {
  RigidTransform t;
  t.rotation = random_rotation(rng);
  t.translation = uniform_vec(rng, -max_translation, max_translation);
  return t;
}

/// Rotation vector with angle uniform in [0, max_angle].
inline RotationVector random_rotvec(Rng &rng, double max_angle = std::numbers::pi) {
  return RotationVector(unit_vec(rng) * uniform(rng, 0.0, max_angle));
}

inline std::vector<Vec3> random_points(Rng &rng, std::size_t n, double half = 0.1) {
  std::vector<Vec3> pts(n);
  for (auto &p : pts) p = uniform_vec(rng, -half, half);
  return pts;
}

inline std::vector<Pose> random_poses(Rng &rng, std::size_t n) {
  std::vector<Pose> poses(n);
  for (auto &p : poses) {
    p.position = uniform_vec(rng, -0.5, 0.5) + Vec3(0, 0, 1.5);
    p.rotation = random_rotvec(rng);
  }
  return poses;
}

inline double max_abs_diff(const Mat3 &a, const Mat3 &b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace trajex::testing
