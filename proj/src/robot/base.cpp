#include "paris/robot/base.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "paris/common/error.hpp"

namespace paris::robot {
namespace {

constexpr double kContactGap = 0.002;
constexpr double kPitchSearch = 0.9;
constexpr double kPitchGrid = 0.002;
constexpr double kLookahead = 0.01;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Interval of the robot axis (arc length from the centre) lying over a support.
struct Support {
  double a;
  double b;
  double height;
  int joist;  ///< -1 for drywall
};

/// Profile segment in body coordinates: s forward, h up from the underside.
struct Segment {
  double s0, h0, s1, h1;
};

double effective_angle(const std::array<double, 4>& f, bool front) {
  return front ? std::min(f[front_left], f[front_right]) : std::min(f[rear_left], f[rear_right]);
}

std::vector<Segment> profile(const RobotGeometry& g, const std::array<double, 4>& flippers) {
  const double hb = 0.5 * g.body_length;
  std::vector<Segment> out{{-hb, 0.0, hb, 0.0}};
  const double af = effective_angle(flippers, true);
  out.push_back({hb, 0.0, hb + g.flipper_length * std::cos(af), g.flipper_length * std::sin(af)});
  const double ar = effective_angle(flippers, false);
  out.push_back({-hb - g.flipper_length * std::cos(ar), g.flipper_length * std::sin(ar), -hb, 0.0});
  return out;
}

/// Clips the line c + t*f against each joist rectangle.
std::vector<Support> supports_along(const world::AtticScene& scene, const Vec2& c, const Vec2& f) {
  std::vector<Support> out;
  for (std::size_t i = 0; i < scene.joists.size(); ++i) {
    const auto& j = scene.joists[i];
    const Vec2 r = c - j.origin;
    const Vec2 n = j.normal();
    double lo = -kInf, hi = kInf;
    auto clip = [&](double p, double q, double min, double max) {
      // min <= p + q t <= max
      if (std::abs(q) < 1e-15) {
        if (p < min || p > max) lo = kInf;
        return;
      }
      double t0 = (min - p) / q, t1 = (max - p) / q;
      if (t0 > t1) std::swap(t0, t1);
      lo = std::max(lo, t0);
      hi = std::min(hi, t1);
    };
    clip(r.dot(j.direction), f.dot(j.direction), 0.0, j.length);
    clip(r.dot(n), f.dot(n), -0.5 * j.width, 0.5 * j.width);
    if (lo <= hi) out.push_back({lo, hi, scene.drywall_level + j.top_height, static_cast<int>(i)});
  }
  out.push_back({-kInf, kInf, scene.drywall_level, -1});
  return out;
}

struct Rotated {
  double S0, Z0, S1, Z1;
};

Rotated rotate(const Segment& sg, double pitch) {
  const double c = std::cos(pitch), s = std::sin(pitch);
  return {sg.s0 * c - sg.h0 * s, sg.s0 * s + sg.h0 * c, sg.s1 * c - sg.h1 * s, sg.s1 * s + sg.h1 * c};
}

/// Lowest relative height of the segment over [a, b]; +inf when disjoint.
double lowest_over(const Rotated& r, double a, double b) {
  double s0 = r.S0, z0 = r.Z0, s1 = r.S1, z1 = r.Z1;
  if (s0 > s1) {
    std::swap(s0, s1);
    std::swap(z0, z1);
  }
  const double lo = std::max(a, s0), hi = std::min(b, s1);
  if (lo > hi) return kInf;
  if (s1 - s0 < 1e-15) return std::min(z0, z1);
  auto at = [&](double s) { return z0 + (z1 - z0) * (s - s0) / (s1 - s0); };
  return std::min(at(lo), at(hi));
}

double required_height(const std::vector<Segment>& prof, const std::vector<Support>& sup, double pitch) {
  double z = -kInf;
  for (const auto& sg : prof) {
    const Rotated r = rotate(sg, pitch);
    for (const auto& s : sup) {
      const double low = lowest_over(r, s.a, s.b);
      if (low < kInf) z = std::max(z, s.height - low);
    }
  }
  return z;
}

ContactReport contacts_at(const std::vector<Segment>& prof, const std::vector<Support>& sup, double z, double pitch) {
  ContactReport rep;
  std::set<int> distinct;
  for (const auto& s : sup) {
    double gap = kInf;
    double cb = kInf, ce = -kInf;
    for (const auto& sg : prof) {
      const Rotated r = rotate(sg, pitch);
      const double low = lowest_over(r, s.a, s.b);
      if (low == kInf) continue;
      gap = std::min(gap, z + low - s.height);
      cb = std::min(cb, std::max(s.a, std::min(r.S0, r.S1)));
      ce = std::max(ce, std::min(s.b, std::max(r.S0, r.S1)));
    }
    if (gap > kContactGap) continue;
    if (s.joist < 0) {
      rep.drywall_contact = true;
      continue;
    }
    rep.contacts.push_back({s.joist, cb, ce});
    distinct.insert(s.joist);
  }
  rep.count = static_cast<int>(distinct.size());
  rep.safe = rep.count >= 2;
  return rep;
}

/// Region [a, b] along the axis: highest joist top overlapping it.
double highest_in(const std::vector<Support>& sup, double a, double b) {
  double h = -kInf;
  for (const auto& s : sup)
    if (s.joist >= 0 && s.a <= b && s.b >= a) h = std::max(h, s.height);
  return h;
}

}  // namespace

RestingPose rest_on_terrain(const world::AtticScene& scene, const RobotGeometry& g, const Pose2& pose,
                            const std::array<double, 4>& flipper_angles, std::optional<double> from_pitch) {
  const auto prof = profile(g, flipper_angles);
  const auto sup = supports_along(scene, pose.position(), pose.forward());
  const int n = static_cast<int>(std::round(kPitchSearch / kPitchGrid));
  double best_p = 0.0;
  double best_z = required_height(prof, sup, 0.0);
  if (from_pitch) {
    best_p = std::clamp(*from_pitch, -kPitchSearch, kPitchSearch);
    best_z = required_height(prof, sup, best_p);
    const double up = required_height(prof, sup, best_p + kPitchGrid);
    const double down = required_height(prof, sup, best_p - kPitchGrid);
    const double dir = up < down ? kPitchGrid : -kPitchGrid;
    while (std::abs(best_p + dir) <= kPitchSearch) {
      const double z = required_height(prof, sup, best_p + dir);
      if (z >= best_z - 1e-12) break;
      best_p += dir;
      best_z = z;
    }
  } else {
    for (int k = 1; k <= n; ++k) {
      for (const double p : {k * kPitchGrid, -k * kPitchGrid}) {
        const double z = required_height(prof, sup, p);
        if (z < best_z - 1e-12) {
          best_z = z;
          best_p = p;
        }
      }
    }
  }
  if (best_p != 0.0) {
    // Golden-section refinement inside the bracketing grid cells.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = best_p - kPitchGrid, b = best_p + kPitchGrid;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = required_height(prof, sup, x1), f2 = required_height(prof, sup, x2);
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = required_height(prof, sup, x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = required_height(prof, sup, x2);
      }
    }
    const double p = 0.5 * (a + b);
    const double z = required_height(prof, sup, p);
    if (z < best_z - 1e-12) {
      best_z = z;
      best_p = p;
    }
  }
  RestingPose out;
  out.z = best_z;
  out.pitch = best_p;
  out.contacts = contacts_at(prof, sup, best_z, best_p);
  return out;
}

ContactReport contact_report(const world::AtticScene& scene, const RobotGeometry& g, const RobotState& s) {
  const auto prof = profile(g, s.flipper_angles);
  const auto sup = supports_along(scene, s.base_pose.position(), s.base_pose.forward());
  return contacts_at(prof, sup, s.base_z, s.pitch);
}

StepResult step_base(const world::AtticScene& scene, const RobotGeometry& g, const RobotState& s,
                     const BaseCommand& cmd_in, double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) throw RuntimeError("dt must lie in (0, 0.1] s");
  check_command_limits(g, cmd_in);

  StepResult out;
  out.state = s;
  RobotState& n = out.state;
  n.time = s.time + dt;

  BaseCommand cmd = cmd_in;
  if (s.battery_charge <= 0.0) {
    cmd = BaseCommand{};
    out.battery_empty = true;
  }
  if (cmd.is_zero()) {
    n.track_left = n.track_right = 0.0;
    out.contacts = contact_report(scene, g, n);
    return out;
  }

  for (int i = 0; i < 4; ++i) {
    const auto k = static_cast<std::size_t>(i);
    n.flipper_angles[k] = std::clamp(s.flipper_angles[k] + cmd.flipper_rates[k] * dt, g.flipper_min, g.flipper_max);
  }

  const MotionDelta d{cmd.linear_velocity * dt, 0.0, cmd.angular_velocity * dt};
  const Pose2 target = integrate_pose(s.base_pose, d);
  bool blocked = !scene.in_footprint(target.position());

  if (!blocked && d.forward != 0.0) {
    const bool fwd = d.forward > 0.0;
    const double sign = fwd ? 1.0 : -1.0;
    const double alpha = effective_angle(n.flipper_angles, fwd);
    const double hb = 0.5 * g.body_length;
    const double c = std::cos(s.pitch), sn = std::sin(s.pitch);
    const double pivot_s = sign * hb * c;
    // Rise is measured from the body centre when the leading pivot dips below it.
    const double pivot_z = s.base_z + std::max(0.0, sign * hb * sn);
    const auto sup = supports_along(scene, s.base_pose.position(), s.base_pose.forward());
    const double travel = std::abs(d.forward);
    double a, b, allowed;
    if (alpha <= g.flipper_contact_angle) {
      // Leading point is the flipper tip in the old pose.
      const double ls = sign * (hb + g.flipper_length * std::cos(alpha));
      const double lh = g.flipper_length * std::sin(alpha);
      const double tip_s = ls * c - lh * sn;
      a = fwd ? tip_s : tip_s - travel - kLookahead;
      b = fwd ? tip_s + travel + kLookahead : tip_s;
      allowed = g.flat_climb_limit;
    } else {
      const double reach = g.flipper_length * std::cos(alpha);
      a = fwd ? pivot_s : pivot_s - travel - std::max(reach, 0.0) - kLookahead;
      b = fwd ? pivot_s + travel + std::max(reach, 0.0) + kLookahead : pivot_s;
      allowed = std::min(g.climb_limit, g.flipper_length * std::sin(alpha));
    }
    const double rise = highest_in(sup, a, b) - pivot_z;
    if (rise > allowed + 1e-9) blocked = true;
  }

  RestingPose rest;
  if (!blocked) {
    rest = rest_on_terrain(scene, g, target, n.flipper_angles, s.pitch);
    if (std::abs(rest.pitch) > g.max_tip_pitch) blocked = true;
  }
  if (blocked) {
    out.stuck = true;
    rest = rest_on_terrain(scene, g, s.base_pose, n.flipper_angles, s.pitch);
    n.track_left = n.track_right = 0.0;
  } else {
    n.base_pose = target;
    const double half = 0.5 * g.track_gauge * cmd.angular_velocity;
    n.track_left = cmd.linear_velocity - half;
    n.track_right = cmd.linear_velocity + half;
  }
  n.base_z = rest.z;
  n.pitch = rest.pitch;
  n.roll = 0.0;
  out.contacts = rest.contacts;

  BatteryModel battery;
  BaseCommand effort = cmd;
  if (out.stuck) effort.linear_velocity = effort.angular_velocity = 0.0;
  n.battery_charge = std::max(0.0, s.battery_charge - battery.current(g, effort) * dt / 3600.0);
  return out;
}

}  // namespace paris::robot
