#include "paris/robot/arm.hpp"

#include <cmath>
#include <limits>

#include "paris/common/error.hpp"

namespace paris::robot {
namespace {

Vec2 rot(double angle, const Vec2& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Vec2 planar(const Vec3& v) { return {v.x(), v.z()}; }

double wrapped_distance2(const ArmJoints& a, const ArmJoints& b) {
  double d = 0.0;
  for (int i = 0; i < kArmDof; ++i) {
    const double e = wrap_angle(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
    d += e * e;
  }
  return d;
}

}  // namespace

ToolPose arm_fk_unchecked(const ArmGeometry& arm, const ArmJoints& q) {
  Iso3 t = Iso3::Identity();
  for (int i = 0; i < kArmDof; ++i) {
    const auto& j = arm.joints[static_cast<std::size_t>(i)];
    t.translate(j.offset);
    t.rotate(Eigen::AngleAxisd(q[static_cast<std::size_t>(i)], j.axis));
  }
  return {t * arm.gun_tip_offset, t.linear().col(0)};
}

Iso3 arm_flange(const ArmGeometry& arm, const ArmJoints& q) {
  if (!arm.within_limits(q)) throw RuntimeError("arm joint limit violation");
  Iso3 t = Iso3::Identity();
  for (int i = 0; i < kArmDof; ++i) {
    const auto& j = arm.joints[static_cast<std::size_t>(i)];
    t.translate(j.offset);
    t.rotate(Eigen::AngleAxisd(q[static_cast<std::size_t>(i)], j.axis));
  }
  return t;
}

ToolPose arm_fk(const ArmGeometry& arm, const ArmJoints& q) {
  if (!arm.within_limits(q)) throw RuntimeError("arm joint limit violation");
  return arm_fk_unchecked(arm, q);
}

IkResult arm_ik(const ArmGeometry& arm, const Vec3& target, const Vec3& approach, double roll,
                const std::optional<ArmJoints>& seed) {
  IkResult best;
  best.error = "unreachable";
  const double an = approach.norm();
  if (!(std::abs(an - 1.0) < 1e-6)) throw RuntimeError("approach must be a unit vector");
  const Vec3 a = approach / an;

  const Vec3 d = target - arm.joints[0].offset;
  const double rxy = std::hypot(d.x(), d.y());
  double azimuth;
  if (rxy > 1e-12) azimuth = std::atan2(d.y(), d.x());
  else if (std::hypot(a.x(), a.y()) > 1e-9) azimuth = std::atan2(a.y(), a.x());
  else azimuth = seed ? (*seed)[0] : 0.0;

  const Vec2 shoulder = planar(arm.joints[1].offset);
  const Vec2 upper = planar(arm.joints[2].offset);
  const Vec2 fore = planar(arm.joints[3].offset);
  const Vec2 last = planar(arm.joints[4].offset) + planar(arm.gun_tip_offset);
  const double l1 = upper.norm(), l2 = fore.norm();
  const double b1 = std::atan2(upper.y(), upper.x());
  const double b2 = std::atan2(fore.y(), fore.x());

  bool geometric = false;
  double best_score = std::numeric_limits<double>::infinity();
  for (const double q1 : {azimuth, wrap_angle(azimuth + kPi)}) {
    const Vec3 er(std::cos(q1), std::sin(q1), 0.0);
    const Vec2 tip(d.dot(er), d.z());
    double ar = a.dot(er), az = a.z();
    double phi = 0.0;
    if (std::hypot(ar, az) > 1e-9) phi = std::atan2(az, ar);
    const Vec2 wrist = tip - rot(phi, last);
    const Vec2 dv = wrist - shoulder;
    const double dist = dv.norm();
    if (dist > l1 + l2 + 1e-9 || dist < std::abs(l1 - l2) - 1e-9) continue;
    const double c2 = std::clamp((dist * dist - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
    const double base_t2 = std::acos(c2);
    for (const double t2 : {-base_t2, base_t2}) {
      geometric = true;
      const double t1 = std::atan2(dv.y(), dv.x()) - std::atan2(l2 * std::sin(t2), l1 + l2 * std::cos(t2));
      const double q2 = wrap_angle(b1 - t1);
      const double q3 = wrap_angle(-(t1 + t2 - b2) - q2);
      const double q4 = wrap_angle(-phi - q2 - q3);
      const ArmJoints q{q1, q2, q3, q4, wrap_angle(roll)};
      if (!arm.within_limits(q, 1e-9)) continue;
      const ToolPose fk = arm_fk_unchecked(arm, q);
      if ((fk.position - target).norm() > 1e-6) continue;
      const double score = seed ? wrapped_distance2(q, *seed) : 0.0;
      if (best.ok && score >= best_score) continue;
      best.ok = true;
      best.joints = q;
      best.error.clear();
      best.achieved_approach = fk.approach;
      best.approach_error = std::acos(std::clamp(fk.approach.dot(a), -1.0, 1.0));
      best_score = score;
      if (!seed) return best;
    }
  }
  if (!best.ok && geometric) best.error = "joint_limits";
  return best;
}

}  // namespace paris::robot
