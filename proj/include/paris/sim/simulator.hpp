#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paris/perception/odometry.hpp"
#include "paris/perception/roi.hpp"
#include "paris/perception/voxel_map.hpp"
#include "paris/robot/base.hpp"
#include "paris/seal/planner.hpp"
#include "paris/sensors/camera.hpp"
#include "paris/sim/command.hpp"
#include "paris/sim/scenario.hpp"

namespace paris::sim {

/// Rejection of a command by the domain checks.
struct CommandError {
  std::string code;  ///< mode | limit | unknown_roi | busy | unreachable | robot_moving | canister_empty | invalid
  std::string message;
};

/// Images rendered at one frame tick; only the scenario's streams are set.
struct FrameSet {
  std::int64_t tick = 0;
  double time = 0.0;
  std::optional<sensors::ColorImage> front_color, rear_color, arm_color;
  std::optional<sensors::DepthImage> front_depth, rear_depth;
  std::optional<sensors::ThermalImage> arm_thermal;
};

/// Events are JSON objects with a "type" key, produced in tick order.
using Events = std::vector<Json>;

/// Fixed-step mission simulation: base, arm, sensing, mapping, inspection
/// and sealing. Commands arrive already validated (see validate) and take
/// effect before the next step.
class Simulator {
 public:
  explicit Simulator(Scenario scenario);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const Scenario& scenario() const { return sc_; }
  std::int64_t tick() const { return tick_; }
  double time() const { return state_.time; }
  Mode mode() const { return mode_; }
  const robot::RobotState& state() const { return state_; }
  const robot::BaseCommand& base_command() const { return cmd_; }
  const perception::PoseEstimate& estimate() const { return est_; }
  const world::AtticScene& scene() const { return scene_; }
  const perception::VoxelMap& map() const { return map_; }
  const std::vector<perception::Roi>& rois() const { return rois_; }
  std::vector<perception::ThermalPoint> thermal_points() const;
  const robot::ContactReport& contacts() const { return contacts_; }
  bool stuck() const { return stuck_; }
  bool watchdog_hold() const { return watchdog_hold_; }
  bool seal_active() const { return job_ != nullptr; }
  /// Anything commanded to move: tracks, flippers, arm slew or a seal pass.
  bool moving() const;

  /// Domain checks for `c` if applied in `mode`; `seal_pending` marks a
  /// RequestSeal already queued for the next tick.
  std::optional<CommandError> validate(const Command& c, Mode mode, bool seal_pending) const;
  void apply(const Command& c, Events& events);
  /// Zeroes every velocity, clears arm targets, releases the trigger and aborts a seal.
  void halt(const std::string& reason, Events& events);
  void set_watchdog_hold(bool on) { watchdog_hold_ = on; }
  /// Advances one tick.
  void step(Events& events);

  /// FNV-1a over the canonical serialisation of the simulation state.
  std::uint64_t state_hash() const;
  Json telemetry() const;
  double signal_strength() const;

  int contact_violations() const { return contact_violations_; }
  int stuck_ticks() const { return stuck_ticks_; }
  double foam_used() const { return foam_used_; }
  const std::vector<seal::SealResult>& seal_results() const { return seal_results_; }
  int frame_ticks() const { return frame_ticks_; }

  /// Called at each frame tick with the rendered streams.
  std::function<void(const FrameSet&)> on_frames;

  /// Planar pose of the base frame in the map frame, from the estimate and
  /// the true attitude.
  Iso3 map_T_base() const;
  Iso3 level_T_base() const;
  Iso3 world_T_stereo() const;
  /// Index of the ROI a request refers to ("roi-N" or "leak:<id>").
  std::optional<std::size_t> resolve_roi(const std::string& id) const;

 private:
  std::optional<seal::SealPlan> plan_for(const perception::Roi& roi) const;
  void render_frame(Events& events);
  void inspect(Events& events);
  void finish_seal(Events& events);

  Scenario sc_;
  world::AtticScene scene_;
  robot::RobotState state_;
  robot::BaseCommand cmd_;
  std::optional<robot::ArmJoints> arm_target_;
  Mode mode_ = Mode::drive;
  perception::PoseEstimate est_;
  perception::VoxelMap map_;
  mutable std::optional<std::uint64_t> map_digest_;
  struct ThermalCell {
    Vec3 position_sum = Vec3::Zero();
    double temp_sum = 0.0;
    std::uint64_t count = 0;
  };
  std::map<perception::VoxelIndex, ThermalCell> thermal_;
  std::vector<perception::Roi> rois_;
  std::unique_ptr<seal::SealJob> job_;
  robot::ContactReport contacts_;
  std::int64_t tick_ = 0;
  bool stuck_ = false;
  bool watchdog_hold_ = false;
  int contact_violations_ = 0;
  int stuck_ticks_ = 0;
  int frame_ticks_ = 0;
  double foam_used_ = 0.0;
  std::vector<seal::SealResult> seal_results_;
};

}  // namespace paris::sim
