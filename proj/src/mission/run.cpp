#include "paris/mission/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "paris/common/error.hpp"
#include "paris/sensors/image_io.hpp"

namespace paris::mission {
namespace fs = std::filesystem;

ReplayWriter::ReplayWriter(std::ostream* os, const sim::Scenario& scenario) : os_(os) {
  const std::string line = header(scenario).dump();
  if (os_) *os_ << line << '\n';
  chain_.u64(fnv1a(line));
}

Json ReplayWriter::header(const sim::Scenario& scenario) {
  return {{"type", "header"},
          {"format", kReplayFormat},
          {"version", kReplayVersion},
          {"scenario", scenario.document},
          {"scenario_digest", hex64(fnv1a(scenario.document.dump()))}};
}

Json ReplayWriter::end_record(std::int64_t ticks, std::uint64_t digest) {
  return {{"type", "end"}, {"ticks", ticks}, {"digest", hex64(digest)}};
}

void ReplayWriter::write(const teleop::TickRecord& rec) {
  if (os_) *os_ << rec.to_json().dump() << '\n';
  chain_.u64(rec.hash);
}

void ReplayWriter::finish(std::int64_t ticks) {
  if (os_) *os_ << end_record(ticks, digest()).dump() << '\n' << std::flush;
}

Json metrics_to_json(const Metrics& m) {
  Json j = {{"roi_precision", m.roi_precision},
            {"roi_recall", m.roi_recall},
            {"roi_count", m.roi_count},
            {"seal_coverage", m.seal_coverage},
            {"final_pose_error", m.final_pose_error},
            {"contact_violations", m.contact_violations},
            {"stuck_ticks", m.stuck_ticks},
            {"foam_used", m.foam_used},
            {"runtime_s", m.runtime},
            {"ticks", m.ticks},
            {"frame_ticks", m.frame_ticks},
            {"errors", m.errors},
            {"digest", m.digest}};
  j["goal_reached"] = m.goal_reached ? Json(*m.goal_reached) : Json(nullptr);
  return j;
}

Metrics collect_metrics(const sim::Simulator& sim) {
  Metrics m;
  const auto match = perception::match_rois(sim.rois(), sim.scene().leaks);
  m.roi_precision = match.precision;
  m.roi_recall = match.recall;
  m.roi_count = static_cast<int>(sim.rois().size());
  for (const auto& l : sim.scene().leaks) m.seal_coverage[l.id] = l.sealed_fraction;
  m.final_pose_error = (sim.estimate().pose.position() - sim.state().base_pose.position()).norm();
  m.contact_violations = sim.contact_violations();
  m.stuck_ticks = sim.stuck_ticks();
  m.foam_used = sim.foam_used();
  m.ticks = sim.tick();
  m.frame_ticks = sim.frame_ticks();
  if (const auto& g = sim.scenario().goal)
    m.goal_reached = (sim.state().base_pose.position() - g->position).norm() <= g->tolerance;
  return m;
}

Metrics run_scenario(const sim::Scenario& sc, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  sim::Simulator sim(sc);
  sim.on_frames = options.on_frames;
  teleop::TeleopService svc(sim, {sc.watchdog_enabled, sc.watchdog_ms, 10});
  ReplayWriter writer(options.log, sc);
  const int driver = svc.open_session(true);
  std::map<std::string, int> errors;
  std::size_t next = 0;
  std::int64_t seq = 0;
  const std::int64_t n = sc.total_ticks();
  for (std::int64_t k = 1; k <= n; ++k) {
    while (next < sc.script.size() && std::llround(sc.script[next].t * sc.tick_hz) <= k - 1) {
      const auto& c = sc.script[next++].command;
      const Json env = {{"seq", ++seq}, {"type", sim::command_type(c)}, {"data", sim::command_data(c)}};
      svc.handle_message(driver, env.dump());
    }
    const auto rec = svc.tick();
    for (const auto& e : rec.events)
      if (e.value("type", "") == "error") ++errors[e.value("code", "unknown")];
    writer.write(rec);
    svc.drain_outbox();
  }
  writer.finish(n);
  if (options.on_finish) options.on_finish(sim);
  Metrics m = collect_metrics(sim);
  m.errors = errors;
  m.digest = hex64(writer.digest());
  m.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

Metrics run_to_dir(const sim::Scenario& sc, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::ofstream log(dir / "replay.jsonl", std::ios::binary);
  if (!log) throw RuntimeError("cannot write " + (dir / "replay.jsonl").string());
  RunOptions opts;
  opts.log = &log;
  opts.on_finish = [&](const sim::Simulator& s) {
    std::ofstream ply(dir / "map.ply", std::ios::binary);
    s.map().write_ply(ply);
    sensors::write_file((dir / "rois.json").string(), perception::rois_to_json(s.rois()).dump(2) + "\n");
  };
  const Metrics m = run_scenario(sc, opts);
  sensors::write_file((dir / "scenario.json").string(), sc.document.dump(2) + "\n");
  sensors::write_file((dir / "metrics.json").string(), metrics_to_json(m).dump(2) + "\n");
  return m;
}

namespace {

ReplayVerdict diverged(std::int64_t tick, std::string message) {
  ReplayVerdict v;
  v.status = ReplayVerdict::Status::divergence;
  v.tick = tick;
  v.message = std::move(message);
  return v;
}

}  // namespace

ReplayVerdict verify_replay(std::istream& in, const ReplayOptions& options) {
  std::string line;
  if (!std::getline(in, line)) return diverged(0, "empty log");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::parse_error&) {
    return diverged(0, "header is not valid JSON");
  }
  if (!header.is_object() || header.value("type", "") != "header" || header.value("format", "") != kReplayFormat)
    return diverged(0, "not a replay header");
  if (!header.contains("version") || !header["version"].is_number_integer() ||
      header["version"].get<std::int64_t>() != kReplayVersion) {
    ReplayVerdict v;
    v.status = ReplayVerdict::Status::version_mismatch;
    v.tick = 0;
    v.message = "unsupported replay version " + (header.contains("version") ? header["version"].dump() : "(none)");
    return v;
  }
  sim::Scenario sc;
  try {
    sc = sim::load_scenario(header.at("scenario"));
  } catch (const std::exception& e) {
    ReplayVerdict v;
    v.status = ReplayVerdict::Status::invalid;
    v.tick = 0;
    v.message = std::string("scenario in header: ") + e.what();
    return v;
  }
  if (ReplayWriter::header(sc).dump() != line) return diverged(0, "header does not match its scenario");
  if (options.seed) sc = sim::with_seed(sc, *options.seed);

  sim::Simulator sim(sc);
  sim.on_frames = options.on_frames;
  teleop::TeleopService svc(sim, {sc.watchdog_enabled, sc.watchdog_ms, 10});
  Fnv1a chain;
  chain.u64(fnv1a(line));
  std::int64_t expected = 1;
  bool ended = false;
  ReplayVerdict verdict;
  auto finish = [&](ReplayVerdict v) {
    if (options.on_finish) options.on_finish(sim);
    v.ticks = sim.tick();
    if (v.digest.empty()) v.digest = hex64(chain.value());
    return v;
  };

  while (std::getline(in, line)) {
    if (ended) return finish(diverged(-1, "records after the end record"));
    try {
      const Json rec = Json::parse(line);
      const std::string type = rec.at("type").get<std::string>();
      if (type == "end") {
        if (ReplayWriter::end_record(sim.tick(), chain.value()).dump() != line)
          return finish(diverged(-1, "end record does not match the re-executed digest"));
        ended = true;
        continue;
      }
      if (type != "tick" || rec.at("tick").get<std::int64_t>() != expected)
        return finish(diverged(expected, "expected tick record " + std::to_string(expected)));
      for (const auto& c : rec.at("commands")) {
        const int sid = c.at("session").get<int>();
        if (c.contains("op")) {
          const std::string op = c.at("op").get<std::string>();
          if (op == "open") {
            if (svc.open_session(c.at("want_driver").get<bool>()) != sid)
              return finish(diverged(expected, "session id mismatch"));
          } else if (op == "close") {
            svc.close_session(sid);
          } else {
            return finish(diverged(expected, "unknown session op"));
          }
        } else {
          svc.handle_message(sid, c.at("text").get<std::string>());
        }
      }
      const auto again = svc.tick();
      svc.drain_outbox();
      if (again.to_json().dump() != line) {
        const bool hash_differs = rec.at("hash").get<std::string>() != hex64(again.hash);
        return finish(diverged(expected, hash_differs ? "state hash diverged" : "record bytes differ"));
      }
      chain.u64(again.hash);
      ++expected;
    } catch (const std::exception& e) {
      return finish(diverged(expected, std::string("unreadable record: ") + e.what()));
    }
  }
  if (!ended) return finish(diverged(-1, "missing end record"));
  ReplayVerdict ok;
  ok.message = "pass";
  return finish(ok);
}

ExportKind export_kind_from_string(const std::string& s) {
  if (s == "map") return ExportKind::map;
  if (s == "rois") return ExportKind::rois;
  if (s == "frames") return ExportKind::frames;
  throw ValidationError("unknown export kind '" + s + "'");
}

int export_run(const std::string& run_dir, ExportKind kind) {
  const fs::path dir(run_dir);
  const fs::path log_path = dir / "replay.jsonl";
  if (!fs::is_regular_file(log_path)) throw RuntimeError("missing artifact: " + log_path.string());
  std::ifstream log(log_path, std::ios::binary);
  const fs::path out = dir / "export";
  fs::create_directories(out);
  int written = 0;
  ReplayOptions opts;
  if (kind == ExportKind::frames) {
    fs::create_directories(out / "frames");
    opts.on_frames = [&](const sim::FrameSet& f) {
      auto name = [&](sim::Stream s) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%06lld_", static_cast<long long>(f.tick));
        return (out / "frames" / (buf + std::string(sim::to_string(s)) + ".png")).string();
      };
      auto color = [&](const std::optional<sensors::ColorImage>& img, sim::Stream s) {
        if (!img) return;
        sensors::write_file(name(s), sensors::encode_png_rgb(*img));
        ++written;
      };
      auto depth = [&](const std::optional<sensors::DepthImage>& img, sim::Stream s) {
        if (!img) return;
        sensors::write_file(name(s), sensors::encode_png_gray16(sensors::depth_to_mm(*img)));
        ++written;
      };
      color(f.front_color, sim::Stream::front_color);
      depth(f.front_depth, sim::Stream::front_depth);
      color(f.rear_color, sim::Stream::rear_color);
      depth(f.rear_depth, sim::Stream::rear_depth);
      if (f.arm_thermal) {
        sensors::write_file(name(sim::Stream::arm_thermal),
                            sensors::encode_png_gray16(sensors::thermal_to_ck(*f.arm_thermal)));
        ++written;
      }
      color(f.arm_color, sim::Stream::arm_color);
    };
  } else {
    opts.on_finish = [&](const sim::Simulator& s) {
      if (kind == ExportKind::map) {
        std::ofstream ply(out / "map.ply", std::ios::binary);
        s.map().write_ply(ply);
      } else {
        sensors::write_file((out / "rois.json").string(), perception::rois_to_json(s.rois()).dump(2) + "\n");
      }
      ++written;
    };
  }
  const auto verdict = verify_replay(log, opts);
  if (verdict.status == ReplayVerdict::Status::version_mismatch || verdict.status == ReplayVerdict::Status::invalid)
    throw ValidationError(verdict.message);
  if (!verdict.ok())
    throw DivergenceError("replay diverged at tick " + std::to_string(verdict.tick.value_or(0)) + ": " + verdict.message);
  return written;
}

}  // namespace paris::mission
