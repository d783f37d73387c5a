#pragma once

#include <array>
#include <string>
#include <vector>

#include "trajex/geometry.hpp"

namespace trajex {

/// Object pose in start-frame camera coordinates.
struct Pose {
  Vec3 position = Vec3::Zero();
  RotationVector rotation;

  /// (x, y, z, rx, ry, rz)
  std::array<double, 6> to_array() const {
    return {position.x(), position.y(), position.z(), rotation.value.x(), rotation.value.y(),
            rotation.value.z()};
  }
  static Pose from_array(const std::array<double, 6> &a) {
    Pose p;
    p.position = Vec3(a[0], a[1], a[2]);
    p.rotation = RotationVector(a[3], a[4], a[5]);
    return p;
  }
  bool finite() const { return position.allFinite() && rotation.value.allFinite(); }
};

struct OrientedBox3D {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  ///< columns are box axes
  Vec3 extents = Vec3::Zero();   ///< full side lengths, meters

  double volume() const { return extents.prod(); }
};

struct ObjectTrajectory {
  std::vector<Pose> poses;
  OrientedBox3D bbox0;
  std::string action;
  std::string object_name;
};

}  // namespace trajex
