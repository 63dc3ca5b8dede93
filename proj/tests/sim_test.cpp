#include <gtest/gtest.h>

#include <cmath>

#include "paris/common/error.hpp"
#include "paris/common/rng.hpp"
#include "paris/sim/command.hpp"
#include "paris/sim/scenario.hpp"
#include "paris/sim/simulator.hpp"
#include "paris/teleop/service.hpp"
#include "support.hpp"

using namespace paris;
using namespace paris::sim;
using paris::test::joists_at;
using paris::test::scenario_doc;
using paris::test::scenario_path;
using paris::test::scene_doc;
using paris::test::testbed_rows;

namespace {

Scenario flat_scenario(double duration = 2.0) {
  return load_scenario(scenario_doc(scene_doc(joists_at(testbed_rows())), Json::array(), duration));
}

void step_n(Simulator& sim, int n) {
  Events ev;
  for (int i = 0; i < n; ++i) sim.step(ev);
}

}  // namespace

TEST(Commands, RoundTripEveryType) {
  const std::vector<std::pair<std::string, Json>> cases = {
      {"drive", {{"v", 0.2}, {"w", -0.1}}},
      {"flipper", {{"index", 2}, {"rate", 0.3}}},
      {"arm_jog", {{"joint", 1}, {"delta", 0.05}}},
      {"arm_goto", {{"position", {0.3, 0.0, 0.1}}, {"approach", {0, 0, -1}}, {"frame", "map"}}},
      {"trigger", {{"on", true}}},
      {"mode_toggle", {{"mode", "arm"}}},
      {"request_seal", {{"roi_id", "roi-1"}}},
      {"swap_canister", Json::object()},
      {"estop", Json::object()},
      {"heartbeat", Json::object()},
      {"inspect", Json::object()},
      {"select_feed", {{"feed", "thermal"}}},
  };
  for (const auto& [type, data] : cases) {
    const Command c = parse_command(type, data);
    EXPECT_EQ(command_type(c), type);
    const Command again = parse_command(type, command_data(c));
    EXPECT_EQ(command_data(again).dump(), command_data(c).dump()) << type;
  }
}

TEST(Commands, RejectsBadPayloads) {
  EXPECT_THROW(parse_command("fly", Json::object()), ParseError);
  EXPECT_THROW(parse_command("drive", {{"v", 0.1}}), ParseError);
  EXPECT_THROW(parse_command("drive", {{"v", "fast"}, {"w", 0.0}}), ParseError);
  EXPECT_THROW(parse_command("drive", {{"v", 0.1}, {"w", 0.0}, {"boost", true}}), ParseError);
  EXPECT_THROW(parse_command("mode_toggle", {{"mode", "fly"}}), ParseError);
  EXPECT_THROW(parse_command("select_feed", {{"feed", "sonar"}}), ParseError);
}

TEST(Commands, ControlClassification) {
  EXPECT_TRUE(is_control(Drive{}));
  EXPECT_TRUE(is_control(EStop{}));
  EXPECT_TRUE(is_control(RequestSeal{"x"}));
  EXPECT_FALSE(is_control(Heartbeat{}));
  EXPECT_FALSE(is_control(SelectFeed{"rgb"}));
}

TEST(Scenarios, ShippedFilesLoad) {
  for (const char* name : {"light_fixture.json", "inspection.json", "mobility.json", "mobility_locked.json",
                           "mapping.json", "fiducials.json", "unreachable.json"}) {
    const auto sc = load_scenario_file(scenario_path(name));
    EXPECT_GT(sc.total_ticks(), 0) << name;
    EXPECT_EQ(sc.tick_hz, 50) << name;
  }
  EXPECT_TRUE(load_scenario_file(scenario_path("mobility_locked.json")).flippers_locked);
}

TEST(Scenarios, ValidationErrors) {
  Json doc = scenario_doc(scene_doc(joists_at(testbed_rows())));
  doc["turbo"] = true;
  EXPECT_THROW(load_scenario(doc), ParseError);
  doc = scenario_doc(scene_doc(joists_at(testbed_rows())));
  doc["duration"] = -1.0;
  EXPECT_THROW(load_scenario(doc), ValidationError);
  doc = scenario_doc(scene_doc(joists_at(testbed_rows())), Json::array({{{"t", 0.0}, {"type", "warp"}}}));
  EXPECT_THROW(load_scenario(doc), ParseError);
  EXPECT_THROW(load_scenario_file("/nonexistent/scenario.json"), std::runtime_error);
}

TEST(Scenarios, WithSeedRewritesDocument) {
  const auto sc = flat_scenario();
  const auto other = with_seed(sc, 99);
  EXPECT_EQ(other.seed, 99u);
  EXPECT_EQ(other.document.at("seed"), 99);
  EXPECT_EQ(load_scenario(other.document).seed, 99u);
}

TEST(Simulator, FreshTelemetry) {
  Simulator sim(flat_scenario());
  const Json t = sim.telemetry();
  EXPECT_DOUBLE_EQ(t.at("battery_voltage").get<double>(), 25.2);
  EXPECT_EQ(t.at("mode"), "drive");
  EXPECT_DOUBLE_EQ(t.at("canister_remaining").get<double>(), 1.3);
  EXPECT_TRUE(t.at("contact_safe").get<bool>());
  const double d = (Vec2(0.61, 1.14) - sim.scene().hatch.position).norm();
  EXPECT_NEAR(t.at("signal_strength").get<double>(), 100.0 * std::exp(-d / 4.0), 1e-12);
}

TEST(Simulator, ModeToggleEchoed) {
  Simulator sim(flat_scenario());
  Events ev;
  sim.apply(ModeToggle{Mode::arm}, ev);
  EXPECT_EQ(sim.telemetry().at("mode"), "arm");
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].at("type"), "mode");
}

TEST(Simulator, DriveForwardOneSecond) {
  Simulator sim(flat_scenario());
  Events ev;
  sim.apply(Drive{0.2, 0.0}, ev);
  step_n(sim, 50);
  EXPECT_NEAR(sim.time(), 1.0, 1e-12);
  EXPECT_NEAR(sim.state().base_pose.y - 1.14, 0.2, 1e-9);
  EXPECT_NEAR(sim.state().base_pose.x, 0.61, 1e-9);
  EXPECT_EQ(sim.contact_violations(), 0);
}

TEST(Simulator, ModeGating) {
  Simulator sim(flat_scenario());
  EXPECT_FALSE(sim.validate(Drive{0.1, 0.0}, Mode::drive, false));
  EXPECT_EQ(sim.validate(Drive{0.1, 0.0}, Mode::arm, false)->code, "mode");
  EXPECT_EQ(sim.validate(Flipper{0, 0.1}, Mode::arm, false)->code, "mode");
  EXPECT_EQ(sim.validate(ArmJog{0, 0.1}, Mode::drive, false)->code, "mode");
  EXPECT_EQ(sim.validate(Trigger{true}, Mode::drive, false)->code, "mode");
  EXPECT_EQ(sim.validate(RequestSeal{"roi-1"}, Mode::drive, false)->code, "mode");
  EXPECT_EQ(sim.validate(Drive{1.0, 0.0}, Mode::drive, false)->code, "limit");
  EXPECT_EQ(sim.validate(Flipper{4, 0.1}, Mode::drive, false)->code, "limit");
  EXPECT_EQ(sim.validate(RequestSeal{"roi-9"}, Mode::arm, false)->code, "unknown_roi");
  EXPECT_EQ(sim.validate(ArmGoto{Vec3(3, 0, 0), -Vec3::UnitZ(), false}, Mode::arm, false)->code, "unreachable");
}

TEST(Simulator, CanisterSwapNeedsStationaryRobot) {
  Simulator sim(flat_scenario());
  Events ev;
  EXPECT_FALSE(sim.validate(SwapCanister{}, Mode::drive, false));
  sim.apply(Drive{0.2, 0.0}, ev);
  step_n(sim, 2);
  EXPECT_EQ(sim.validate(SwapCanister{}, Mode::drive, false)->code, "robot_moving");
}

TEST(Simulator, DeterministicStateHash) {
  Simulator a(flat_scenario()), b(flat_scenario());
  Events ev;
  for (auto* s : {&a, &b}) s->apply(Drive{0.15, 0.2}, ev);
  for (int i = 0; i < 60; ++i) {
    step_n(a, 1);
    step_n(b, 1);
    ASSERT_EQ(a.state_hash(), b.state_hash());
  }
  Simulator c(with_seed(flat_scenario(), 6));
  EXPECT_NE(c.state_hash(), Simulator(flat_scenario()).state_hash());
}

TEST(Simulator, HaltZeroesEverything) {
  Simulator sim(flat_scenario());
  Events ev;
  sim.apply(Drive{0.2, 0.5}, ev);
  sim.apply(Flipper{1, 0.3}, ev);
  step_n(sim, 3);
  EXPECT_TRUE(sim.moving());
  sim.halt("estop", ev);
  EXPECT_TRUE(sim.base_command().is_zero());
  EXPECT_FALSE(sim.state().trigger_on);
  EXPECT_EQ(ev.back().at("reason"), "estop");
  step_n(sim, 1);
  EXPECT_FALSE(sim.moving());
}

namespace {

// Drives a scenario's script through a teleop driver session up to `until` seconds.
struct ScriptedRun {
  Simulator sim;
  teleop::TeleopService svc;
  int driver;
  std::size_t next = 0;
  std::size_t stop;
  std::int64_t seq = 0;

  explicit ScriptedRun(const Scenario& sc) : sim(sc), svc(sim, {false, 500, 10}), driver(svc.open_session(true)),
        stop(sc.script.size()) {}

  void run_until(double until) {
    const auto& sc = sim.scenario();
    while (sim.time() < until - 1e-9) {
      const std::int64_t k = sim.tick() + 1;
      while (next < stop && std::llround(sc.script[next].t * sc.tick_hz) <= k - 1) send(sc.script[next++].command);
      svc.tick();
    }
  }
  Json send(const Command& c) {
    svc.drain_outbox();
    svc.handle_message(driver, Json{{"seq", ++seq}, {"type", command_type(c)}, {"data", command_data(c)}}.dump());
    auto out = svc.drain_outbox();
    return out.empty() ? Json() : out.back().message;
  }
};

}  // namespace

TEST(Simulator, SealRequestBusyAndCompletion) {
  ScriptedRun r(load_scenario_file(scenario_path("light_fixture.json")));
  r.stop = r.sim.scenario().script.size() - 1;  // leave out the scripted seal
  r.run_until(5.5);
  ASSERT_EQ(r.sim.rois().size(), 1u);
  EXPECT_EQ(r.send(RequestSeal{"leak:light"}).at("type"), "ack");
  const Json second = r.send(RequestSeal{"leak:light"});
  EXPECT_EQ(second.at("code"), "busy");
  r.svc.tick();
  EXPECT_TRUE(r.sim.seal_active());
  EXPECT_EQ(r.send(RequestSeal{r.sim.rois()[0].id}).at("code"), "busy");
  EXPECT_EQ(r.send(ModeToggle{Mode::drive}).at("code"), "busy");
  double last = 0.0;
  while (r.sim.seal_active()) {
    r.svc.tick();
    const Json t = r.sim.telemetry();
    if (!t.at("active_seal").is_null()) {
      const double p = t.at("active_seal").at("progress").get<double>();
      EXPECT_GE(p, last);
      last = p;
    }
    ASSERT_LT(r.sim.time(), 60.0);
  }
  ASSERT_EQ(r.sim.seal_results().size(), 1u);
  EXPECT_DOUBLE_EQ(r.sim.seal_results()[0].coverage_fraction, 1.0);
  EXPECT_NEAR(r.sim.state().canister_remaining, 1.3 - r.sim.foam_used(), 1e-12);
  EXPECT_NEAR(r.sim.telemetry().at("canister_remaining").get<double>(), 1.2874, 1e-3);
}

TEST(Simulator, UnreachableSealRejectedWithoutFoam) {
  ScriptedRun r(load_scenario_file(scenario_path("unreachable.json")));
  r.stop = r.sim.scenario().script.size() - 1;
  r.run_until(9.9);
  ASSERT_EQ(r.sim.rois().size(), 1u);
  const Json e = r.send(RequestSeal{"leak:light"});
  EXPECT_EQ(e.at("type"), "error");
  EXPECT_EQ(e.at("code"), "unreachable");
  r.run_until(11.0);
  EXPECT_EQ(r.sim.foam_used(), 0.0);
  EXPECT_EQ(r.sim.state().canister_remaining, 1.3);
}
