#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paris/common/json_reader.hpp"
#include "paris/perception/odometry.hpp"
#include "paris/perception/roi.hpp"
#include "paris/robot/geometry.hpp"
#include "paris/seal/planner.hpp"
#include "paris/sim/command.hpp"
#include "paris/world/scene.hpp"

namespace paris::sim {

inline constexpr int kScenarioVersion = 1;

/// Image streams rendered at each frame tick, in stream-id order.
enum class Stream : std::uint32_t {
  front_color = 0,
  front_depth = 1,
  rear_color = 2,
  rear_depth = 3,
  arm_thermal = 4,
  arm_color = 5,
};
inline constexpr int kStreamCount = 6;
const char* to_string(Stream s);
Stream stream_from_string(const std::string& s);

struct SensingConfig {
  int frame_stride = 10;  ///< ticks between frame ticks
  std::vector<Stream> streams;
  bool mapping = true;  ///< integrate base depth into the voxel map at frame ticks
  double depth_noise = 0.0;    ///< m
  double thermal_noise = 0.1;  ///< K
  double voxel_size = 0.02;
  int map_pixel_stride = 4;
  double thermal_voxel = 0.005;  ///< de-duplication grid for fused thermal points
};

struct FiducialConfig {
  bool enabled = false;
  int every_ticks = 20;
  double sigma_pos = 0.01;  ///< m
  double sigma_rot = 0.0;   ///< rad
};

struct Goal {
  Vec2 position = Vec2::Zero();
  double tolerance = 0.1;
};

struct ScriptEntry {
  double t = 0.0;  ///< s
  Command command;
};

struct Scenario {
  std::string name;
  world::AtticScene scene;
  robot::RobotGeometry robot;
  Pose2 initial_pose;
  std::array<double, 4> initial_flippers{};
  bool flippers_locked = false;
  std::uint64_t seed = 1;
  double duration = 10.0;  ///< s
  int tick_hz = 50;
  bool watchdog_enabled = false;
  int watchdog_ms = 500;
  SensingConfig sensing;
  perception::DriftParams odometry;
  FiducialConfig fiducials;
  perception::RoiParams roi;
  seal::SealOptions seal;
  std::optional<Goal> goal;
  std::vector<ScriptEntry> script;
  /// Normalised document (scene inline, seed resolved); replays rebuild from it.
  Json document;

  double dt() const { return 1.0 / tick_hz; }
  std::int64_t total_ticks() const;
};

/// Parses and validates a scenario. `scene_file` paths resolve against
/// `base_dir`. Throws ParseError/ValidationError.
Scenario load_scenario(const Json& doc, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);
/// Same scenario with a different seed (document updated accordingly).
Scenario with_seed(const Scenario& s, std::uint64_t seed);

}  // namespace paris::sim
