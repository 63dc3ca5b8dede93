#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paris/common/json_reader.hpp"
#include "paris/perception/roi.hpp"
#include "paris/robot/arm.hpp"
#include "paris/robot/state.hpp"
#include "paris/seal/arc.hpp"
#include "paris/world/scene.hpp"

namespace paris::seal {

struct SealOptions {
  double bead_width = 0.02;  ///< m
  double standoff = 0.05;    ///< gun tip to surface, m
  double speed = 0.05;       ///< tracing speed, m/s
  double sample_spacing = 0.005;
};

/// Gun-tip trajectory for one ROI, in the world frame.
struct SealPlan {
  std::string roi_id;
  std::vector<ArcSegment> segments;  ///< bead-laying passes, in execution order
  double standoff = 0.05;
  double bead_width = 0.02;
  double speed = 0.05;
  double estimated_foam = 0.0;  ///< m^2
  bool reachable = false;
  std::optional<Vec3> first_unreachable;  ///< world point of the first failing waypoint
  Vec3 approach = -Vec3::UnitZ();         ///< tool axis while tracing (towards the surface)
  Iso3 world_T_arm = Iso3::Identity();    ///< arm base pose the plan was checked against
  perception::RoiGeometry target;         ///< ROI geometry the coverage is scored against
};

/// Traces a fitted ROI: a circle as two semicircles, a segment as one shallow
/// arc (sagitta min(1 cm, length/10) away from the surface), a patch as
/// boustrophedon rows at bead_width pitch. Every sampled waypoint is checked
/// with the arm IK from `world_T_arm`. Throws RuntimeError for an empty geometry.
SealPlan plan_roi_trace(const perception::Roi& roi, const robot::ArmGeometry& arm, const Iso3& world_T_arm,
                        const SealOptions& options = {});

struct SealResult {
  std::string roi_id;
  double coverage_fraction = 0.0;
  double foam_used = 0.0;  ///< m^2
  double duration = 0.0;   ///< s
  std::optional<std::string> aborted_reason;
};

/// Incremental execution of a plan against the robot state: slews the arm to
/// each pass, traces at the commanded speeds with the trigger on, draws foam
/// from the canister and scores coverage against the ROI geometry and against
/// every leak in the scene.
class SealJob {
 public:
  /// Throws RuntimeError("unreachable") for an unreachable plan and
  /// RuntimeError("canister_empty") when the canister is empty. The plan is
  /// expressed in a mapping frame; `world_T_plan` maps it into the scene frame
  /// where the leaks are scored.
  SealJob(SealPlan plan, const world::AtticScene& scene, const robot::ArmGeometry& arm, const robot::RobotState& state,
          const Iso3& world_T_plan = Iso3::Identity());

  /// Advances by dt; returns true once finished (completed or aborted).
  bool step(robot::RobotState& state, double dt);
  bool finished() const { return finished_; }
  /// Stops the job where it stands and releases the trigger.
  void abort(robot::RobotState& state, const std::string& reason);
  /// Fraction of the total planned path traversed.
  double progress() const;
  SealResult result() const;
  /// Covered fraction of each leak's core centreline.
  std::map<std::string, double> leak_coverage() const;
  const SealPlan& plan() const { return plan_; }

 private:
  struct Leg {
    std::vector<Vec3> points;  ///< gun tip path
    std::vector<double> cumulative;
    int arc = -1;  ///< plan segment supplying the speeds
    bool bead = false;
    double foam_scale = 1.0;  ///< arc length per unit of sampled polyline length
    // Joint slew leg (points empty).
    robot::ArmJoints q_from{}, q_to{};
    double slew_time = 0.0;
  };
  struct Coverage {
    std::vector<Vec3> samples;
    std::vector<char> covered;
    double fraction() const;
  };

  Vec3 tip_at(const Leg& leg, double s) const;
  void sweep(const Vec3& a, const Vec3& b);
  void set_arm(robot::RobotState& state, const Vec3& tip);

  SealPlan plan_;
  robot::ArmGeometry arm_;
  Iso3 world_T_plan_ = Iso3::Identity();
  std::vector<Leg> legs_;
  std::size_t leg_ = 0;
  double leg_pos_ = 0.0;  ///< arc length or elapsed slew time within the current leg
  double foam_used_ = 0.0;
  double canister_start_ = 0.0;
  double elapsed_ = 0.0;
  double total_path_ = 0.0;
  double done_path_ = 0.0;
  bool finished_ = false;
  std::optional<std::string> aborted_;
  Coverage roi_cov_;
  std::vector<std::pair<std::string, Coverage>> leak_cov_;
};

/// Runs a job to completion with fixed dt, then records the leak coverage in
/// the scene at the final state time.
SealResult execute_plan(world::AtticScene& scene, const robot::ArmGeometry& arm, robot::RobotState& state,
                        const SealPlan& plan, double dt);

/// Refills the canister. Throws RuntimeError when the robot is moving.
robot::RobotState canister_swap(const robot::RobotState& state);

Json seal_plan_to_json(const SealPlan& plan);
Json seal_result_to_json(const SealResult& result);

}  // namespace paris::seal
