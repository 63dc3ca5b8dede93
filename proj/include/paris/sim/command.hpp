#pragma once

#include <string>
#include <variant>

#include "paris/common/geometry.hpp"
#include "paris/common/json_reader.hpp"

namespace paris::sim {

enum class Mode { drive, arm };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct Drive {
  double v = 0.0;  ///< m/s
  double w = 0.0;  ///< rad/s
};
struct Flipper {
  int index = 0;
  double rate = 0.0;  ///< rad/s
};
struct ArmJog {
  int joint = 0;
  double delta = 0.0;  ///< rad
};
/// Gun-tip target; `map_frame` selects the map frame instead of the robot base frame.
struct ArmGoto {
  Vec3 position = Vec3::Zero();
  Vec3 approach = -Vec3::UnitZ();
  bool map_frame = false;
};
struct Trigger {
  bool on = false;
};
struct ModeToggle {
  Mode mode = Mode::drive;
};
/// `roi_id` is a current ROI id, or "leak:<id>" naming the ROI matched to a
/// ground-truth leak (scripts only).
struct RequestSeal {
  std::string roi_id;
};
struct SwapCanister {};
struct EStop {};
struct Heartbeat {};
/// Captures one arm thermal view, fuses it and re-runs ROI detection.
struct Inspect {};
struct SelectFeed {
  std::string feed;  ///< rgb | thermal | map
};

using Command = std::variant<Drive, Flipper, ArmJog, ArmGoto, Trigger, ModeToggle, RequestSeal, SwapCanister, EStop,
                             Heartbeat, Inspect, SelectFeed>;

/// Wire name of the payload ("drive", "arm_goto", ...).
const char* command_type(const Command& c);

/// Parses a payload from its wire type and data object. Throws ParseError
/// for an unknown type, missing or mistyped fields, or unknown keys.
Command parse_command(const std::string& type, const Json& data);
Json command_data(const Command& c);

/// Commands that mutate robot state and are reserved for the driver.
bool is_control(const Command& c);

}  // namespace paris::sim
