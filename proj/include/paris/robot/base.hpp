#pragma once

#include <optional>
#include <vector>

#include "paris/robot/state.hpp"
#include "paris/world/scene.hpp"

namespace paris::robot {

struct Contact {
  int joist_index;
  double s_begin;  ///< contact extent along the robot axis, relative to the body centre
  double s_end;
};

struct ContactReport {
  std::vector<Contact> contacts;
  int count = 0;  ///< distinct joists touched
  bool safe = false;
  bool drywall_contact = false;
};

/// Quasi-static resting configuration of the base over the joists.
struct RestingPose {
  double z = 0.0;
  double pitch = 0.0;
  ContactReport contacts;
};

/// Settles the robot's underside profile (rear flipper, body, front flipper)
/// along its axis onto the terrain, minimising the height of the body centre
/// subject to non-penetration of joist tops and drywall. With `from_pitch`
/// the pitch descends from that attitude to the nearest local minimum
/// instead of the global one, so the body cannot vault over a support edge.
RestingPose rest_on_terrain(const world::AtticScene& scene, const RobotGeometry& g, const Pose2& pose,
                            const std::array<double, 4>& flipper_angles,
                            std::optional<double> from_pitch = std::nullopt);

/// Joist contacts for the state's pose and flipper angles.
ContactReport contact_report(const world::AtticScene& scene, const RobotGeometry& g, const RobotState& s);

struct StepResult {
  RobotState state;
  ContactReport contacts;
  bool stuck = false;          ///< requested translation blocked by terrain or tipping
  bool battery_empty = false;  ///< velocities were forced to zero
};

/// Advances the base by dt: flipper integration with clamping, differential
/// drive, step/obstacle check, resting attitude, battery drain.
/// Throws RuntimeError if dt is outside (0, 0.1] or the command exceeds limits.
StepResult step_base(const world::AtticScene& scene, const RobotGeometry& g, const RobotState& s,
                     const BaseCommand& cmd, double dt);

}  // namespace paris::robot
