#pragma once

#include <optional>
#include <string>

#include "paris/robot/geometry.hpp"

namespace paris::robot {

struct ToolPose {
  Vec3 position;  ///< gun tip, arm base frame
  Vec3 approach;  ///< unit tool axis
};

/// Flange frame in the arm base frame. Throws RuntimeError on a limit violation.
Iso3 arm_flange(const ArmGeometry& arm, const ArmJoints& q);
ToolPose arm_fk(const ArmGeometry& arm, const ArmJoints& q);
/// FK without the limit check (used to evaluate candidate solutions).
ToolPose arm_fk_unchecked(const ArmGeometry& arm, const ArmJoints& q);

struct IkResult {
  bool ok = false;
  ArmJoints joints{};
  std::string error;       ///< "unreachable" or "joint_limits" when !ok
  Vec3 achieved_approach = Vec3::Zero();
  double approach_error = 0.0;  ///< angle between requested and achieved approach (rad)
};

/// Analytic 5-DOF IK: waist from the target azimuth, planar 3R solve for
/// shoulder/elbow/wrist-angle, wrist-rotate set to `roll`. Approach components
/// outside the arm's vertical plane cannot be met; the in-plane projection is
/// used and the deviation reported. Among valid branches the one closest to
/// `seed` is returned.
IkResult arm_ik(const ArmGeometry& arm, const Vec3& target, const Vec3& approach, double roll = 0.0,
                const std::optional<ArmJoints>& seed = std::nullopt);

}  // namespace paris::robot
