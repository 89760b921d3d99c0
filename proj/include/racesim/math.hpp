#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace racesim {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Elementary right-handed rotations.
inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

// Z-Y-X (yaw, pitch, roll) convention: R = Rz(yaw) Ry(pitch) Rx(roll).
inline Mat3 rpy_to_matrix(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

inline Quat rpy_to_quat(double roll, double pitch, double yaw) {
  Quat q(rpy_to_matrix(roll, pitch, yaw));
  q.normalize();
  return q;
}

// Rotation vector -> unit quaternion. Small-angle branch keeps the result
// well-conditioned near zero.
inline Quat exp_map(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z());
    q.normalize();
    return q;
  }
  const double half = 0.5 * angle;
  const double s = std::sin(half) / angle;
  return Quat(std::cos(half), s * rotvec.x(), s * rotvec.y(), s * rotvec.z());
}

// Vee of the skew part: 0.5 * vee(M - M^T).
inline Vec3 vee_skew(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

inline double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

// Evaluate c[0] + c[1] x + c[2] x^2 + ... (Horner).
template <typename Coeffs>
double polyval(const Coeffs& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

template <typename Coeffs>
double polyder(const Coeffs& c, double x) {
  double acc = 0.0;
  const auto n = static_cast<int>(c.size());
  for (int i = n - 1; i >= 1; --i) acc = acc * x + static_cast<double>(i) * c[static_cast<std::size_t>(i)];
  return acc;
}

// Builds an orthonormal frame whose first column is `forward`. The second
// axis is taken horizontal where possible so walls/cameras stay upright.
inline Mat3 frame_from_forward(const Vec3& forward) {
  const Vec3 x = forward.normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(x.dot(up)) > 0.999) up = Vec3::UnitX();
  const Vec3 y = up.cross(x).normalized();
  const Vec3 z = x.cross(y);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

}  // namespace racesim
