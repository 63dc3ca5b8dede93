#pragma once

#include <array>
#include <vector>

#include "paris/common/geometry.hpp"
#include "paris/robot/geometry.hpp"

namespace paris::robot {

inline constexpr double kCanisterCapacity = 1.3;  // m^2 of coverage per canister
inline constexpr double kBatteryCapacity = 20.0;  // Ah

enum Flipper : int { front_left = 0, front_right = 1, rear_left = 2, rear_right = 3 };

struct RobotState {
  Pose2 base_pose;
  double base_z = 0.0;  ///< height of the underside centre
  double roll = 0.0;
  double pitch = 0.0;   ///< nose-up positive
  std::array<double, 4> flipper_angles{};  ///< 0 = extended flat, +up, pi = folded over the body
  double track_left = 0.0;   ///< m/s
  double track_right = 0.0;  ///< m/s
  ArmJoints arm_joints{};
  bool trigger_on = false;
  double canister_remaining = kCanisterCapacity;
  int canister_swaps = 0;
  double battery_charge = kBatteryCapacity;
  double time = 0.0;

  /// World pose of the base frame (origin at the underside centre).
  Iso3 world_T_base() const;
  bool stationary() const { return track_left == 0.0 && track_right == 0.0; }
};

struct BaseCommand {
  double linear_velocity = 0.0;
  double angular_velocity = 0.0;
  std::array<double, 4> flipper_rates{};

  bool is_zero() const;
};

/// Throws RuntimeError when any magnitude exceeds the geometry's limits.
void check_command_limits(const RobotGeometry& g, const BaseCommand& cmd);

struct BatteryModel {
  double full_voltage = 25.2;
  double empty_voltage = 19.2;
  double idle_current = 0.0;         ///< A
  double drive_current_full = 12.0;  ///< A at full track effort
  double flipper_current_full = 2.0; ///< A per flipper at full rate

  double voltage(double charge_ah) const;
  /// Current drawn for the given effort, in amperes.
  double current(const RobotGeometry& g, const BaseCommand& cmd) const;
};

}  // namespace paris::robot
