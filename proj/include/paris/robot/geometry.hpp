#pragma once

#include <array>
#include <string>
#include <vector>

#include "paris/common/geometry.hpp"
#include "paris/common/json_reader.hpp"
#include "paris/world/scene.hpp"

namespace paris::robot {

inline constexpr int kArmDof = 5;
using ArmJoints = std::array<double, kArmDof>;

struct ArmJoint {
  std::string name;
  Vec3 offset;  ///< from the previous joint frame, applied before this joint's rotation
  Vec3 axis;    ///< unit rotation axis in the joint frame
  double lower;
  double upper;
};

/// Five revolute joints (waist z, shoulder y, elbow y, wrist-angle y,
/// wrist-rotate x) ending at the flange; the gun tip sits at
/// gun_tip_offset in the flange frame and the tool axis is flange +x.
struct ArmGeometry {
  std::array<ArmJoint, kArmDof> joints;
  Vec3 gun_tip_offset{0.12, 0.0, 0.0};
  Iso3 mount = Iso3::Identity();          ///< robot base frame -> arm base frame
  Iso3 stereo_mount = Iso3::Identity();   ///< flange -> stereo (optical) camera frame
  Iso3 stereo_T_thermal = Iso3::Identity();
  double max_joint_speed = 1.0;           ///< rad/s, used when slewing to arm targets

  /// Sum of the planar link lengths from the shoulder to the gun tip.
  double reach() const;
  bool within_limits(const ArmJoints& q, double tol = 1e-12) const;
};

struct BaseCameraMount {
  std::string name;
  Iso3 mount;  ///< robot base frame -> optical frame (z forward, x right, y down)
};

struct PayloadComponents {
  double gun = 0.38;
  double bracket = 0.08;
  double camera_module = 0.12;
  double tube = 0.05;
  double foam_in_tube = 0.07;

  double total() const { return gun + bracket + camera_module + tube + foam_in_tube; }
};

struct RobotGeometry {
  std::string preset = "paris1";
  double width = 0.701;
  double folded_height = 0.48;
  double body_length = 0.50;
  double flipper_length = 0.24;
  double track_gauge = 0.52;
  double payload_capacity = 0.75;
  double mass = 30.0;
  double flipper_min = -0.5;
  double flipper_max = kPi;
  /// Flippers at or below this angle (rad) touch the ground plane of the body.
  double flipper_contact_angle = 0.1;
  double climb_limit = 0.18;
  double flat_climb_limit = 0.03;
  double max_tip_pitch = 0.6;
  double max_linear_velocity = 0.3;
  double max_angular_velocity = 1.0;
  double max_flipper_rate = 0.5;
  ArmGeometry arm;
  std::vector<BaseCameraMount> base_cameras;
  PayloadComponents payload;

  double unfolded_span() const { return body_length + 2.0 * flipper_length; }
};

/// Geometry presets; everything but width, folded_height, span and mass is
/// a configured default.
RobotGeometry paris1();
RobotGeometry paris2();
ArmGeometry default_arm();

/// Reads `robot{preset, overrides{...}}` from a scene/scenario document;
/// returns paris1() when the key is absent.
RobotGeometry load_robot_geometry(const Json* robot_section);
void validate_geometry(const RobotGeometry& g);

enum class HatchOrientation {
  width_along_hatch_width,   ///< robot width spans the hatch width
  width_along_hatch_height,  ///< robot width spans the hatch height
};

inline constexpr double kHatchClearance = 0.005;

/// Axis-aligned orientations in which the robot's cross-section passes the
/// hatch with kHatchClearance on every side. Unfolded robots never fit.
std::vector<HatchOrientation> hatch_fit(const RobotGeometry& g, bool folded, const world::Hatch& hatch);

/// Accepts a payload no heavier than the arm's capacity and returns the
/// remaining margin (kg). Throws RuntimeError on overload or negative mass.
double attach_payload(const RobotGeometry& g, double mass);

}  // namespace paris::robot
