#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace paris {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Iso3 = Eigen::Isometry3d;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Planar pose on the attic floor: position plus heading about +z.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 forward() const { return {std::cos(heading), std::sin(heading)}; }
  Vec2 left() const { return {-std::sin(heading), std::cos(heading)}; }

  /// Lifts to 3D at the given height, yawed about +z.
  Iso3 to_iso3(double z = 0.0) const {
    Iso3 t = Iso3::Identity();
    t.translation() = Vec3(x, y, z);
    t.linear() = Eigen::AngleAxisd(heading, Vec3::UnitZ()).toRotationMatrix();
    return t;
  }

  bool operator==(const Pose2&) const = default;
};

/// Robot-frame motion increment: forward/lateral translation and heading change.
struct MotionDelta {
  double forward = 0.0;
  double lateral = 0.0;
  double turn = 0.0;

  bool is_zero() const { return forward == 0.0 && lateral == 0.0 && turn == 0.0; }
};

/// Midpoint-heading integration of a robot-frame increment. Shared by the
/// ground-truth stepper and odometry so noiseless estimates match exactly.
inline Pose2 integrate_pose(const Pose2& p, const MotionDelta& d) {
  const double mid = p.heading + 0.5 * d.turn;
  const double c = std::cos(mid);
  const double s = std::sin(mid);
  return {p.x + d.forward * c - d.lateral * s, p.y + d.forward * s + d.lateral * c,
          wrap_angle(p.heading + d.turn)};
}

/// Rotation from roll/pitch/yaw (applied as Rz(yaw) * Ry(pitch) * Rx(roll)).
inline Mat3 rpy_to_matrix(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

inline Iso3 make_iso(const Vec3& t, const Mat3& r = Mat3::Identity()) {
  Iso3 out = Iso3::Identity();
  out.linear() = r;
  out.translation() = t;
  return out;
}

/// Yaw of the body x-axis projected onto the floor plane.
inline double yaw_of(const Iso3& t) {
  const Vec3 x = t.linear().col(0);
  return std::atan2(x.y(), x.x());
}

/// Rotation whose columns are an optical frame (x right, y down, z along
/// `forward`) given a world-ish `up` hint not parallel to `forward`.
inline Mat3 look_rotation(const Vec3& forward, const Vec3& up) {
  const Vec3 z = forward.normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

/// Any unit vector perpendicular to `n` (deterministic choice).
inline Vec3 any_perpendicular(const Vec3& n) {
  const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(a).normalized();
}

/// Distance from p to the closed segment [a, b].
inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace paris
