#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace rasim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Rigid transform taking local coordinates to world coordinates.
// Cameras look down local +z with +x right and +y down, matching the
// top-left image origin.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + position; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.position = -(inv.rotation * position);
    return inv;
  }

  static Pose from_axis_angle(const Vec3& axis, double angle_rad,
                              const Vec3& position) {
    Pose p;
    double n = axis.norm();
    if (n > 0.0) {
      p.rotation = Eigen::AngleAxisd(angle_rad, axis / n).toRotationMatrix();
    }
    p.position = position;
    return p;
  }
};

// Keyframe interpolation: positions lerp, rotations slerp, so every
// in-between pose is still a valid rigid motion.
inline Pose interpolate(const Pose& a, const Pose& b, double t) {
  Pose out;
  Quat qa(a.rotation), qb(b.rotation);
  out.rotation = qa.slerp(t, qb).toRotationMatrix();
  out.position = (1.0 - t) * a.position + t * b.position;
  return out;
}

}  // namespace rasim
