#include "paris/seal/arc.hpp"

#include <cmath>

#include "paris/common/error.hpp"

namespace paris::seal {

Vec3 circumcenter(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = a - c, v = b - c;
  const Vec3 w = u.cross(v);
  return c + (u.squaredNorm() * v - v.squaredNorm() * u).cross(w) / (2.0 * w.squaredNorm());
}

ArcSegment plan_arc(const Vec3& p0, const Vec3& p1, const Vec3& p2, const std::array<double, 3>& speeds) {
  if (p0 == p1 || p1 == p2 || p0 == p2) throw RuntimeError("arc waypoints must be distinct");
  for (double s : speeds)
    if (!(s > 0.0)) throw RuntimeError("arc speeds must be positive");
  ArcSegment a;
  a.waypoints = {p0, p1, p2};
  a.speeds = speeds;
  const Vec3 cr = (p1 - p0).cross(p2 - p1);
  if (0.5 * cr.norm() < kCollinearArea) {
    a.degenerate_line = true;
    a.normal = Vec3::Zero();
    return a;
  }
  a.normal = cr.normalized();
  a.center = circumcenter(p0, p1, p2);
  a.radius = (p0 - a.center).norm();
  const Vec3 u = (p0 - a.center).normalized();
  const Vec3 v = a.normal.cross(u);
  auto angle = [&](const Vec3& q) {
    const Vec3 d = q - a.center;
    double t = std::atan2(d.dot(v), d.dot(u));
    if (t < 0.0) t += 2.0 * kPi;
    return t;
  };
  a.angle_mid = angle(p1);
  a.sweep = angle(p2);
  return a;
}

double ArcSegment::length() const {
  if (degenerate_line) return (waypoints[1] - waypoints[0]).norm() + (waypoints[2] - waypoints[1]).norm();
  return radius * sweep;
}

double ArcSegment::length_to_mid() const {
  if (degenerate_line) return (waypoints[1] - waypoints[0]).norm();
  return radius * angle_mid;
}

Vec3 ArcSegment::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  if (degenerate_line) {
    const double l0 = length_to_mid();
    if (s <= l0) return waypoints[0] + (waypoints[1] - waypoints[0]) * (l0 > 0.0 ? s / l0 : 0.0);
    const double l1 = length() - l0;
    return waypoints[1] + (waypoints[2] - waypoints[1]) * (l1 > 0.0 ? (s - l0) / l1 : 0.0);
  }
  const Vec3 u = (waypoints[0] - center).normalized();
  const Vec3 v = normal.cross(u);
  const double t = s / radius;
  return center + radius * (std::cos(t) * u + std::sin(t) * v);
}

double ArcSegment::speed_at(double s) const {
  const double l0 = length_to_mid(), l = length();
  if (s <= l0) return l0 > 0.0 ? speeds[0] + (speeds[1] - speeds[0]) * std::max(0.0, s) / l0 : speeds[1];
  const double l1 = l - l0;
  return l1 > 0.0 ? speeds[1] + (speeds[2] - speeds[1]) * std::min(1.0, (s - l0) / l1) : speeds[2];
}

std::vector<Vec3> ArcSegment::sample(double spacing) const {
  if (!(spacing > 0.0)) throw RuntimeError("sample spacing must be positive");
  std::vector<Vec3> out{waypoints[0]};
  const double l0 = length_to_mid(), l = length();
  auto piece = [&](double from, double to, const Vec3& end) {
    const int n = std::max(1, static_cast<int>(std::ceil((to - from) / spacing)));
    for (int i = 1; i < n; ++i) out.push_back(point_at(from + (to - from) * i / n));
    out.push_back(end);
  };
  piece(0.0, l0, waypoints[1]);
  piece(l0, l, waypoints[2]);
  return out;
}

}  // namespace paris::seal
