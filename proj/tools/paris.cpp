#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "paris/common/error.hpp"
#include "paris/mission/run.hpp"
#include "paris/sim/scenario.hpp"
#include "paris/teleop/server.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kDivergence = 3 };

using namespace paris;

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out) {
  auto sc = sim::load_scenario_file(path);
  if (seed) sc = sim::with_seed(sc, *seed);
  const auto m = mission::run_to_dir(sc, out);
  std::cout << mission::metrics_to_json(m).dump(2) << "\n";
  return kOk;
}

int cmd_replay(const std::string& path, std::optional<std::uint64_t> seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open " + path);
  mission::ReplayOptions opts;
  opts.seed = seed;
  const auto v = mission::verify_replay(in, opts);
  using S = mission::ReplayVerdict::Status;
  if (v.ok()) {
    std::cout << "pass: " << v.ticks << " ticks, digest " << v.digest << "\n";
    return kOk;
  }
  std::cerr << "fail";
  if (v.tick) {
    if (*v.tick == -1)
      std::cerr << " at end record";
    else if (*v.tick == 0)
      std::cerr << " at header";
    else
      std::cerr << " at tick " << *v.tick;
  }
  std::cerr << ": " << v.message << "\n";
  return (v.status == S::version_mismatch || v.status == S::invalid) ? kValidation : kDivergence;
}

int cmd_serve(const std::string& path, const std::string& listen, const std::string& config, const std::string& replay) {
  const auto sc = sim::load_scenario_file(path);
  auto cfg = teleop::load_server_config(config.empty() ? std::nullopt : std::optional<std::string>(config));
  if (!listen.empty()) std::tie(cfg.host, cfg.port) = teleop::parse_listen(listen);
  if (!replay.empty()) cfg.replay_path = replay;
  teleop::Server server(sc, cfg);
  const auto port = server.bind();
  std::cerr << "serving " << sc.name << " on " << cfg.host << ":" << port << "\n";
  server.run();
  return kOk;
}

int cmd_export(const std::string& dir, const std::string& kind) {
  const int n = mission::export_run(dir, mission::export_kind_from_string(kind));
  std::cout << "wrote " << n << " file(s) to " << dir << "/export\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PARIS attic robot simulator"};
  app.require_subcommand(1);

  std::string scenario, out = "run", log, listen, config, replay_out, run_dir, kind;
  std::optional<std::uint64_t> seed, replay_seed;

  auto* run = app.add_subcommand("run", "run a scripted scenario headless");
  run->add_option("scenario", scenario, "scenario JSON")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out, "output directory");

  auto* rep = app.add_subcommand("replay", "re-execute a replay log and verify every record");
  rep->add_option("log", log, "replay log (NDJSON)")->required();
  rep->add_option("--seed", replay_seed, "re-execute under a different seed");

  auto* serve = app.add_subcommand("serve", "serve a scenario to operator consoles");
  serve->add_option("scenario", scenario, "scenario JSON")->required();
  serve->add_option("--listen", listen, "HOST:PORT");
  serve->add_option("--config", config, "server config JSON");
  serve->add_option("--replay", replay_out, "replay log path written while serving");

  auto* exp = app.add_subcommand("export", "export artifacts of a finished run");
  exp->add_option("run_dir", run_dir, "run directory")->required();
  exp->add_option("--kind", kind, "map | rois | frames")->required()->check(CLI::IsMember({"map", "rois", "frames"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return cmd_run(scenario, seed, out);
    if (*rep) return cmd_replay(log, replay_seed);
    if (*serve) return cmd_serve(scenario, listen, config, replay_out);
    if (*exp) return cmd_export(run_dir, kind);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const mission::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
