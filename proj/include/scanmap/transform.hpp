#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace scanmap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Body twist [linear; angular], units m/s and rad/s when used as a velocity.
using Twist = Eigen::Matrix<double, 6, 1>;

/// SE(3) pose: rotation matrix plus translation, meters.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// RᵀR = I and det R = 1, both within tol elementwise.
  bool isValid(double tol = 1e-9) const;

  /// Projects rotation back onto SO(3); call after long composition chains.
  RigidTransform orthonormalized() const;
};

/// compose(T2, T1) applies T1 first, then T2.
RigidTransform compose(const RigidTransform& t2, const RigidTransform& t1);
RigidTransform invert(const RigidTransform& t);

Mat3 skew(const Vec3& v);

/// Rodrigues formula; safe for small angles.
Mat3 so3Exp(const Vec3& omega);
Vec3 so3Log(const Mat3& rotation);

/// Exponential of a twist [v; w]: rotation so3Exp(w), translation V(w)·v.
RigidTransform se3Exp(const Twist& xi);
Twist se3Log(const RigidTransform& t);

/// Rotation angle of R, radians in [0, pi].
double rotationAngle(const Mat3& rotation);

/// Angle of R1ᵀ·R2, i.e. how far apart two rotations are.
double rotationDistance(const Mat3& r1, const Mat3& r2);

}  // namespace scanmap
