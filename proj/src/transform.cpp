#include "scanmap/transform.hpp"

#include <cmath>

namespace scanmap {

bool RigidTransform::isValid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform RigidTransform::orthonormalized() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  return {q.toRotationMatrix(), translation};
}

RigidTransform compose(const RigidTransform& t2, const RigidTransform& t1) {
  return {t2.rotation * t1.rotation, t2.rotation * t1.translation + t2.translation};
}

RigidTransform invert(const RigidTransform& t) {
  Mat3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Mat3 so3Exp(const Vec3& omega) {
  double angle = omega.norm();
  if (angle < 1e-12) {
    return Mat3::Identity() + skew(omega);
  }
  Vec3 axis = omega / angle;
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

Vec3 so3Log(const Mat3& rotation) {
  Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

RigidTransform se3Exp(const Twist& xi) {
  Vec3 v = xi.head<3>();
  Vec3 w = xi.tail<3>();
  double angle = w.norm();
  Mat3 rot = so3Exp(w);
  Mat3 jl;  // left Jacobian of SO(3)
  if (angle < 1e-9) {
    jl = Mat3::Identity() + 0.5 * skew(w);
  } else {
    Mat3 wx = skew(w);
    jl = Mat3::Identity() + (1.0 - std::cos(angle)) / (angle * angle) * wx +
         (angle - std::sin(angle)) / (angle * angle * angle) * (wx * wx);
  }
  return {rot, jl * v};
}

Twist se3Log(const RigidTransform& t) {
  Vec3 w = so3Log(t.rotation);
  double angle = w.norm();
  Mat3 jlInv;
  if (angle < 1e-9) {
    jlInv = Mat3::Identity() - 0.5 * skew(w);
  } else {
    Mat3 wx = skew(w);
    double half = 0.5 * angle;
    double cot = half / std::tan(half);
    jlInv = Mat3::Identity() - 0.5 * wx + (1.0 - cot) / (angle * angle) * (wx * wx);
  }
  Twist xi;
  xi.head<3>() = jlInv * t.translation;
  xi.tail<3>() = w;
  return xi;
}

double rotationAngle(const Mat3& rotation) {
  // atan2 of (sin, cos) keeps full precision near zero, unlike plain acos
  Vec3 axisVec(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
               rotation(1, 0) - rotation(0, 1));
  double s = 0.5 * axisVec.norm();
  double c = 0.5 * (rotation.trace() - 1.0);
  return std::atan2(s, c);
}

double rotationDistance(const Mat3& r1, const Mat3& r2) {
  return rotationAngle(r1.transpose() * r2);
}

}  // namespace scanmap
