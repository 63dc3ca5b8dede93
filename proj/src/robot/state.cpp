#include "paris/robot/state.hpp"

#include <cmath>

#include "paris/common/error.hpp"

namespace paris::robot {

Iso3 RobotState::world_T_base() const {
  return make_iso(Vec3(base_pose.x, base_pose.y, base_z), rpy_to_matrix(roll, -pitch, base_pose.heading));
}

bool BaseCommand::is_zero() const {
  if (linear_velocity != 0.0 || angular_velocity != 0.0) return false;
  for (double r : flipper_rates)
    if (r != 0.0) return false;
  return true;
}

void check_command_limits(const RobotGeometry& g, const BaseCommand& cmd) {
  constexpr double eps = 1e-12;
  if (!std::isfinite(cmd.linear_velocity) || std::abs(cmd.linear_velocity) > g.max_linear_velocity + eps)
    throw RuntimeError("linear velocity exceeds limit");
  if (!std::isfinite(cmd.angular_velocity) || std::abs(cmd.angular_velocity) > g.max_angular_velocity + eps)
    throw RuntimeError("angular velocity exceeds limit");
  for (double r : cmd.flipper_rates)
    if (!std::isfinite(r) || std::abs(r) > g.max_flipper_rate + eps) throw RuntimeError("flipper rate exceeds limit");
}

double BatteryModel::voltage(double charge_ah) const {
  const double f = std::clamp(charge_ah / kBatteryCapacity, 0.0, 1.0);
  return empty_voltage + f * (full_voltage - empty_voltage);
}

double BatteryModel::current(const RobotGeometry& g, const BaseCommand& cmd) const {
  const double half = 0.5 * g.track_gauge * cmd.angular_velocity;
  const double vl = std::abs(cmd.linear_velocity - half);
  const double vr = std::abs(cmd.linear_velocity + half);
  const double effort = std::min(1.0, std::max(vl, vr) / g.max_linear_velocity);
  double flip = 0.0;
  for (double r : cmd.flipper_rates) flip += std::min(1.0, std::abs(r) / g.max_flipper_rate);
  return idle_current + drive_current_full * effort + flipper_current_full * flip;
}

}  // namespace paris::robot
