#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "paris/common/hash.hpp"
#include "paris/sim/scenario.hpp"
#include "paris/sim/simulator.hpp"
#include "paris/teleop/service.hpp"

namespace paris::mission {

inline constexpr int kReplayVersion = 1;
inline constexpr const char* kReplayFormat = "paris.replay";

/// Appends NDJSON records: one header, one record per tick, one end record.
/// The digest chains the header digest with every tick hash.
class ReplayWriter {
 public:
  ReplayWriter(std::ostream* os, const sim::Scenario& scenario);
  void write(const teleop::TickRecord& rec);
  void finish(std::int64_t ticks);
  std::uint64_t digest() const { return chain_.value(); }

  static Json header(const sim::Scenario& scenario);
  static Json end_record(std::int64_t ticks, std::uint64_t digest);

 private:
  std::ostream* os_;
  Fnv1a chain_;
};

struct Metrics {
  double roi_precision = 1.0;
  double roi_recall = 1.0;
  int roi_count = 0;
  std::map<std::string, double> seal_coverage;  ///< sealed fraction per leak
  double final_pose_error = 0.0;                ///< m, estimate vs truth
  int contact_violations = 0;
  int stuck_ticks = 0;
  double foam_used = 0.0;  ///< m^2
  double runtime = 0.0;    ///< wall-clock s
  std::int64_t ticks = 0;
  int frame_ticks = 0;
  std::optional<bool> goal_reached;
  std::map<std::string, int> errors;  ///< protocol error codes seen
  std::string digest;
};

Json metrics_to_json(const Metrics& m);
Metrics collect_metrics(const sim::Simulator& sim);

struct RunOptions {
  std::ostream* log = nullptr;
  std::function<void(const sim::FrameSet&)> on_frames;
  std::function<void(const sim::Simulator&)> on_finish;
};

/// Headless scripted run: one driver session replays the script through
/// the teleop service, tick by tick.
Metrics run_scenario(const sim::Scenario& scenario, const RunOptions& options = {});

/// Runs into `out_dir`: replay.jsonl, scenario.json, metrics.json, map.ply, rois.json.
Metrics run_to_dir(const sim::Scenario& scenario, const std::string& out_dir);

struct ReplayVerdict {
  enum class Status { pass, version_mismatch, invalid, divergence };
  Status status = Status::pass;
  std::optional<std::int64_t> tick;  ///< first divergent tick (0 = header, -1 = end record)
  std::string message;
  std::int64_t ticks = 0;
  std::string digest;

  bool ok() const { return status == Status::pass; }
};

struct ReplayOptions {
  std::optional<std::uint64_t> seed;  ///< re-execute under a different seed
  std::function<void(const sim::FrameSet&)> on_frames;
  /// Called with the simulator after the last tick, whatever the verdict.
  std::function<void(const sim::Simulator&)> on_finish;
};

/// Re-executes a replay log and byte-compares every record it regenerates.
ReplayVerdict verify_replay(std::istream& log, const ReplayOptions& options = {});

/// A replay log that does not re-execute to the same records.
class DivergenceError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

enum class ExportKind { map, rois, frames };
ExportKind export_kind_from_string(const std::string& s);

/// Re-simulates `run_dir`/replay.jsonl and writes the requested artifacts
/// under `run_dir`/export. Returns the number of files written. Throws
/// RuntimeError for missing artifacts and DivergenceError for a divergent log.
int export_run(const std::string& run_dir, ExportKind kind);

}  // namespace paris::mission
