// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "paris/common/rng.hpp"
#include "paris/mission/run.hpp"
#include "paris/perception/odometry.hpp"
#include "paris/perception/roi.hpp"
#include "paris/robot/arm.hpp"
#include "paris/robot/geometry.hpp"
#include "paris/seal/arc.hpp"
#include "paris/sensors/camera.hpp"
#include "paris/sim/scenario.hpp"
#include "paris/sim/simulator.hpp"
#include "paris/teleop/service.hpp"
#include "paris/world/surfaces.hpp"
#include "support.hpp"
#include "teleop_model.hpp"

using namespace paris;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances
constexpr double kHatchBudgetS = 1e-3;
constexpr double kMobilityBudgetS = 10.0;
constexpr double kSpacingMin = 0.355, kSpacingMax = 0.405, kStep = 0.18;
constexpr double kMappingFraction = 0.95;
constexpr double kMappingBudgetS = 30.0;
constexpr int kOdoSeeds = 500, kOdoSteps = 200, kFiducialEvery = 20;
constexpr double kOdoSigma = 0.01, kOdoRmsLo = 0.10, kOdoRmsHi = 0.20;
constexpr double kObsSigma = 0.01, kMcSlack = 1.15;
constexpr double kThermalNoise = 0.1, kRadiusTol = 0.10;
constexpr int kSealSamples = 5;
constexpr double kSealSpanS = 1800.0, kSealResidual = 0.05, kFoamTol = 1e-12;
constexpr int kArcTriples = 10000;
constexpr double kArcRelTol = 1e-9;
constexpr int kIkTrips = 10000;
constexpr double kIkTol = 1e-6;
constexpr int kFuzzMessages = 1000, kWatchdogMs = 500;
constexpr int kBitFlips = 200;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

sim::Scenario shipped(const std::string& name) { return sim::load_scenario_file(test::scenario_path(name + ".json")); }

Outcome hatch() {
  const world::Hatch h;  // 0.57 x 0.76
  const auto t0 = Clock::now();
  const auto p1 = robot::hatch_fit(robot::paris1(), true, h);
  const auto p2 = robot::hatch_fit(robot::paris2(), true, h);
  const double dt = seconds_since(t0);
  return {p1.size() == 1 && p2.size() >= 2 && dt < kHatchBudgetS,
          fmt("paris1 %.0f orientation(s), paris2 %.0f, %.3f ms", static_cast<double>(p1.size()),
              static_cast<double>(p2.size()), dt * 1e3)};
}

Outcome mobility() {
  const auto sc = shipped("mobility");
  const auto locked = shipped("mobility_locked");
  double lo = 1e9, hi = 0.0, top_lo = 1e9, top_hi = 0.0;
  const auto& js = sc.scene.joists;
  for (std::size_t i = 0; i < js.size(); ++i) {
    top_lo = std::min(top_lo, js[i].top_height);
    top_hi = std::max(top_hi, js[i].top_height);
    if (i == 0) continue;
    const double y0 = js[i - 1].origin.y(), y1 = js[i].origin.y();
    // joists the route crosses, start to goal
    if (y1 < sc.initial_pose.y || y0 > sc.goal->position.y()) continue;
    lo = std::min(lo, y1 - y0);
    hi = std::max(hi, y1 - y0);
  }
  const bool geometry_ok = lo >= kSpacingMin - 1e-9 && hi <= kSpacingMax + 1e-9 && std::abs(top_hi - top_lo - kStep) < 1e-9;
  auto t0 = Clock::now();
  const auto m = mission::run_scenario(sc);
  const double t_run = seconds_since(t0);
  t0 = Clock::now();
  const auto ml = mission::run_scenario(locked);
  const double t_locked = seconds_since(t0);
  const bool pass = geometry_ok && m.contact_violations == 0 && m.goal_reached == true && ml.goal_reached == false &&
                    t_run < kMobilityBudgetS && t_locked < kMobilityBudgetS;
  return {pass, fmt("spacing %.3f-%.3f m, step %.2f m, violations %.0f, ", lo, hi, top_hi - top_lo,
                    m.contact_violations) +
                    "goal " + (m.goal_reached == true ? "reached" : "missed") + ", locked " +
                    (ml.goal_reached == true ? "reached" : "stopped") + fmt(", %.2f s / %.2f s", t_run, t_locked)};
}

Outcome mapping() {
  const auto sc = shipped("mapping");
  const bool perfect = sc.sensing.depth_noise == 0.0 && sc.odometry.sigma_pos == 0.0 && sc.odometry.sigma_heading == 0.0 &&
                       sc.odometry.bias == 0.0;
  std::size_t total = 0, near = 0;
  double vs = 0.0;
  mission::RunOptions o;
  o.on_finish = [&](const sim::Simulator& s) {
    vs = s.map().voxel_size();
    for (const auto& [key, cell] : s.map().cells()) {
      ++total;
      if (world::distance_to_surfaces(s.scene(), s.map().center_of(key)) <= vs) ++near;
    }
  };
  const auto t0 = Clock::now();
  mission::run_scenario(sc, o);
  const double dt = seconds_since(t0);
  const double frac = total ? static_cast<double>(near) / static_cast<double>(total) : 0.0;
  return {perfect && total > 0 && frac >= kMappingFraction && dt < kMappingBudgetS,
          fmt("%.4f of %.0f voxels within %.3f m, %.2f s", frac, static_cast<double>(total), vs, dt)};
}

Outcome odometry() {
  const MotionDelta step{0.005, 0.0, 0.0};
  perception::DriftParams drift;
  drift.sigma_pos = kOdoSigma;
  const Pose2 start{0.61, 0.6, kPi / 2};

  world::AtticScene scene = world::load_scene(test::scene_doc(test::joists_at(test::testbed_rows())));
  for (int i = 0; i < 3; ++i) {
    world::FiducialTag t;
    t.id = i + 1;
    t.size = 0.12;
    t.pose = make_iso(Vec3(0.3 + 0.31 * i, 2.5, 0.3), rpy_to_matrix(kPi / 2, 0.0, 0.0));
    scene.tags.push_back(t);
  }
  const auto geom = robot::paris1();
  const Iso3 level_T_camera = make_iso(Vec3(0, 0, 0.2), Mat3::Identity()) * geom.base_cameras.front().mount;
  const auto k = sensors::rgbd_intrinsics();

  double ss_drift = 0.0, ss_fid = 0.0;
  int corrections = 0, attempts = 0;
  for (int s = 0; s < kOdoSeeds; ++s) {
    Pose2 truth = start;
    perception::PoseEstimate a, b;
    a.pose = b.pose = start;
    for (int n = 1; n <= kOdoSteps; ++n) {
      truth = integrate_pose(truth, step);
      const auto seed = derive_seed(static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(n));
      a = perception::odometry_update(a, step, drift, seed);
      b = perception::odometry_update(b, step, drift, seed);
      if (n % kFiducialEvery == 0) {
        ++attempts;
        const Iso3 world_T_camera = make_iso(Vec3(0, 0, 0.2), Mat3::Identity()) * truth.to_iso3(0.0) *
                                    geom.base_cameras.front().mount;
        const auto obs = sensors::observe_fiducials(scene, world_T_camera, k, kObsSigma, 0.0, derive_seed(seed, 1));
        if (!obs.empty()) {
          ++corrections;
          b = perception::fiducial_correct(b, obs, scene.tags, level_T_camera, kObsSigma, n).estimate;
        }
      }
    }
    ss_drift += (a.pose.position() - truth.position()).squaredNorm();
    ss_fid += (b.pose.position() - truth.position()).squaredNorm();
  }
  const double rms_drift = std::sqrt(ss_drift / kOdoSeeds), rms_fid = std::sqrt(ss_fid / kOdoSeeds);
  const double bound = 2.0 * kObsSigma * kMcSlack;
  return {rms_drift >= kOdoRmsLo && rms_drift <= kOdoRmsHi && rms_fid <= bound && corrections == attempts,
          fmt("drift RMS %.4f m, with fiducials %.4f m (bound %.4f), corrections %.0f", rms_drift, rms_fid, bound,
              static_cast<double>(corrections))};
}

Outcome inspection() {
  const auto sc = shipped("inspection");
  std::vector<perception::Roi> rois;
  std::vector<world::LeakSource> leaks;
  mission::RunOptions o;
  o.on_finish = [&](const sim::Simulator& s) {
    rois = s.rois();
    leaks = s.scene().leaks;
  };
  const auto m = mission::run_scenario(sc, o);
  const auto match = perception::match_rois(rois, leaks);
  double radius_err = 1e9;
  for (const auto& [ri, li] : match.pairs) {
    const auto& leak = leaks[static_cast<std::size_t>(li)];
    if (leak.id != "light") continue;
    const auto* circle = std::get_if<perception::CircleRoi>(&rois[static_cast<std::size_t>(ri)].geometry);
    const auto* annulus = std::get_if<world::AnnulusGeometry>(&leak.geometry);
    if (circle && annulus) radius_err = std::abs(circle->radius - annulus->radius) / annulus->radius;
  }
  const bool defaults = sc.sensing.thermal_noise == kThermalNoise && sc.roi.gradient_threshold == perception::RoiParams{}.gradient_threshold &&
                        sc.roi.cluster_radius == perception::RoiParams{}.cluster_radius && sc.roi.min_points == perception::RoiParams{}.min_points;
  return {defaults && leaks.size() == 4 && match.precision == 1.0 && match.recall == 1.0 && m.roi_precision == 1.0 &&
              m.roi_recall == 1.0 && radius_err <= kRadiusTol,
          fmt("%.0f ROIs, precision %.2f, recall %.2f, light radius error %.1f%%", static_cast<double>(rois.size()),
              match.precision, match.recall, radius_err * 100.0)};
}

Outcome sealing() {
  const auto sc = shipped("light_fixture");
  world::AtticScene after;
  double foam = 0.0, remaining = 0.0, results_foam = 0.0;
  int swaps = 0;
  mission::RunOptions o;
  o.on_finish = [&](const sim::Simulator& s) {
    after = s.scene();
    foam = s.foam_used();
    remaining = s.state().canister_remaining;
    swaps = s.state().canister_swaps;
    for (const auto& r : s.seal_results()) results_foam += r.foam_used;
  };
  mission::run_scenario(sc, o);
  const world::LeakSource* leak = nullptr;
  for (const auto& l : after.leaks)
    if (l.id == "light") leak = &l;
  if (!leak || !leak->seal_time) return {false, "light leak was not sealed"};
  const auto* ring = std::get_if<world::AnnulusGeometry>(&leak->geometry);
  if (!ring) return {false, "light leak is not an annulus"};
  const Vec3 rim = ring->center + Vec3(ring->radius, 0.0, 0.0);
  const double t0 = *leak->seal_time;
  const double pre = std::abs(world::temperature_at(sc.scene, rim, t0) - sc.scene.ambient_attic_temp);
  bool monotone = true;
  double last = pre, dev = pre;
  std::string trace;
  for (int i = 0; i < kSealSamples; ++i) {
    const double t = t0 + kSealSpanS * i / (kSealSamples - 1);
    dev = std::abs(world::temperature_at(after, rim, t) - after.ambient_attic_temp);
    if (i > 0 && !(dev < last)) monotone = false;
    last = dev;
    trace += fmt(i ? " %.3f" : "%.3f", dev);
  }
  const double conservation = std::abs(robot::kCanisterCapacity * (swaps + 1) - remaining - foam);
  const double ledger = std::abs(results_foam - foam);
  const bool pass = monotone && dev / pre < kSealResidual && conservation <= kFoamTol && ledger <= kFoamTol && foam > 0.0;
  return {pass, "rim |dT| " + trace + fmt(" K (pre-seal %.3f K, residual %.2f%%), foam error %.1e", pre, 100.0 * dev / pre,
                                          std::max(conservation, ledger))};
}

Vec3 bisector_center(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  Mat3 m;
  m.row(0) = (b - a).transpose();
  m.row(1) = (c - a).transpose();
  m.row(2) = n.transpose();
  const Vec3 rhs(0.5 * ((b - a).dot(b + a)), 0.5 * ((c - a).dot(c + a)), n.dot(a));
  return m.fullPivLu().solve(rhs);
}

Outcome arc() {
  Rng rng(31);
  double worst_center = 0.0, worst_radius = 0.0;
  int degenerate = 0;
  for (int i = 0; i < kArcTriples; ++i) {
    Vec3 a, b, c;
    do {
      a = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      b = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      c = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while ((b - a).cross(c - a).norm() < 1e-3);
    const auto s = seal::plan_arc(a, b, c, {0.05, 0.05, 0.05});
    if (s.degenerate_line) {
      ++degenerate;
      continue;
    }
    worst_center = std::max(worst_center, (s.center - bisector_center(a, b, c)).norm() / s.radius);
    for (const Vec3& p : s.sample(s.radius / 20))
      worst_radius = std::max(worst_radius, std::abs((p - s.center).norm() - s.radius) / s.radius);
  }
  return {degenerate == 0 && worst_center <= kArcRelTol && worst_radius <= kArcRelTol,
          fmt("%.0f triples, worst centre error %.2e, worst radius error %.2e (relative)", kArcTriples, worst_center,
              worst_radius)};
}

// Reachable set of the planar chain (waist and roll at zero) sampled on a
// joint grid. A target whose (r, z) lies farther than the Lipschitz bound
// from every sample is certified unreachable.
struct PlanarWorkspace {
  double cell = 0.0, bound = 0.0;
  std::set<std::pair<long, long>> occupied;
  bool planar = true;

  explicit PlanarWorkspace(const robot::ArmGeometry& arm) {
    const double dq = 0.02;
    bound = 3.0 * arm.reach() * dq / 2.0;
    cell = bound;
    std::array<int, 3> n{};
    for (int j = 0; j < 3; ++j)
      n[j] = static_cast<int>(std::ceil((arm.joints[j + 1].upper - arm.joints[j + 1].lower) / dq)) + 1;
    robot::ArmJoints q{};
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j)
        for (int k = 0; k < n[2]; ++k) {
          q[1] = lerp_joint(arm, 1, i, n[0]);
          q[2] = lerp_joint(arm, 2, j, n[1]);
          q[3] = lerp_joint(arm, 3, k, n[2]);
          const Vec3 p = robot::arm_fk_unchecked(arm, q).position;
          if (std::abs(p.y()) > 1e-9) planar = false;
          occupied.insert(key(p.x(), p.z()));
        }
  }
  static double lerp_joint(const robot::ArmGeometry& arm, int j, int i, int n) {
    const auto& jt = arm.joints[static_cast<std::size_t>(j)];
    return jt.lower + (jt.upper - jt.lower) * i / (n - 1);
  }
  std::pair<long, long> key(double r, double z) const {
    return {static_cast<long>(std::floor(r / cell)), static_cast<long>(std::floor(z / cell))};
  }
  bool maybe_reachable_planar(double r, double z) const {
    const auto [kr, kz] = key(r, z);
    for (long dr = -1; dr <= 1; ++dr)
      for (long dz = -1; dz <= 1; ++dz)
        if (occupied.count({kr + dr, kz + dz})) return true;
    return false;
  }
  bool certified_unreachable(const robot::ArmGeometry& arm, const Vec3& t) const {
    const double rho = std::hypot(t.x(), t.y()), phi = std::atan2(t.y(), t.x());
    for (int m = -3; m <= 3; ++m) {
      const double waist = phi + m * kPi;
      if (waist < arm.joints[0].lower || waist > arm.joints[0].upper) continue;
      if (maybe_reachable_planar(m % 2 == 0 ? rho : -rho, t.z())) return false;
    }
    return true;
  }
};

Outcome kinematics() {
  const auto arm = robot::default_arm();
  Rng rng(12);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < kIkTrips; ++i) {
    robot::ArmJoints q{};
    for (int j = 0; j < robot::kArmDof; ++j) q[static_cast<std::size_t>(j)] = rng.uniform(arm.joints[static_cast<std::size_t>(j)].lower, arm.joints[static_cast<std::size_t>(j)].upper);
    const auto tip = robot::arm_fk(arm, q);
    const auto ik = robot::arm_ik(arm, tip.position, tip.approach);
    if (!ik.ok) {
      ++failures;
      continue;
    }
    worst = std::max(worst, (robot::arm_fk(arm, ik.joints).position - tip.position).norm());
  }

  const PlanarWorkspace ws(arm);
  int certified = 0, false_accepts = 0, bad_solutions = 0;
  for (int i = 0; i < kIkTrips; ++i) {
    const Vec3 t(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.0, 1.2));
    if (std::hypot(t.x(), t.y()) < 0.02) continue;
    const Vec3 approach = Vec3(t.x(), t.y(), 0.0).normalized();
    const auto ik = robot::arm_ik(arm, t, approach);
    const bool unreachable = ws.certified_unreachable(arm, t);
    certified += unreachable;
    if (ik.ok && unreachable) ++false_accepts;
    if (ik.ok && (!arm.within_limits(ik.joints) || (robot::arm_fk(arm, ik.joints).position - t).norm() >= kIkTol))
      ++bad_solutions;
  }
  return {ws.planar && failures == 0 && worst < kIkTol && false_accepts == 0 && bad_solutions == 0 && certified > 1000,
          fmt("round-trip worst %.2e m (%.0f rejected), ", worst, failures) +
              fmt("%.0f certified-unreachable targets, %.0f false accepts, %.0f bad solutions", certified, false_accepts,
                  bad_solutions)};
}

Outcome protocol() {
  auto scenario = sim::load_scenario(test::scenario_doc(test::scene_doc(test::joists_at(test::testbed_rows())), Json::array(), 60.0));
  std::string detail;
  bool pass = true;

  {
    sim::Simulator s(scenario);
    teleop::TeleopService svc(s, {false, kWatchdogMs, 10});
    test::TeleopModel model;
    const int d = svc.open_session(true), o = svc.open_session(false);
    model.driver = d;
    Rng rng(2024);
    std::map<int, std::int64_t> seq{{d, 0}, {o, 0}};
    std::map<int, std::int64_t> last_ack;
    int mismatches = 0, replies = 0, mode_rejects = 0, ordering = 0;
    for (int i = 0; i < kFuzzMessages; ++i) {
      const int sid = rng.uniform() < 0.75 ? d : o;
      const std::string text = test::random_message(rng, seq[sid]);
      const std::string want = model.expect(sid, text);
      svc.handle_message(sid, text);
      int n = 0;
      for (const auto& out : svc.drain_outbox()) {
        const std::string type = out.message.value("type", "");
        if (out.session != sid || (type != "ack" && type != "error")) continue;
        ++n;
        const std::string kind = type == "ack" ? "ack" : out.message.at("code").get<std::string>();
        if (kind != want) ++mismatches;
        if (kind == "mode") ++mode_rejects;
        if (kind == "ack") {
          const auto sq = out.message.at("seq").get<std::int64_t>();
          if (last_ack.count(sid) && sq <= last_ack[sid]) ++ordering;
          last_ack[sid] = sq;
        }
      }
      replies += n == 1;
      if (rng.uniform() < 0.3) {
        svc.tick();
        model.tick();
        if (s.mode() != model.actual) ++mismatches;
      }
    }
    pass = pass && replies == kFuzzMessages && mismatches == 0 && ordering == 0 && mode_rejects > 0;
    detail += fmt("fuzz %.0f/%.0f single replies, %.0f mismatches, %.0f mode rejections", replies, kFuzzMessages,
                  mismatches, mode_rejects);
  }

  {
    sim::Simulator s(scenario);
    teleop::TeleopService svc(s, {true, kWatchdogMs, 10});
    const int d = svc.open_session(true);
    svc.handle_message(d, test::env(1, "drive", {{"v", 0.2}, {"w", 0.0}}));
    const double tick_ms = 1000.0 / s.scenario().tick_hz;
    double halted_at = -1.0;
    for (int k = 0; k < 100 && halted_at < 0; ++k) {
      const double start = svc.now_ms();
      const auto rec = svc.tick();
      for (const auto& e : rec.events)
        if (e.value("reason", "") == "watchdog") halted_at = start;
    }
    const bool stopped = s.base_command().is_zero() && s.state().track_left == 0.0 && s.state().track_right == 0.0;
    const bool ok = halted_at >= kWatchdogMs && halted_at < kWatchdogMs + tick_ms && stopped;
    pass = pass && ok;
    detail += fmt("; watchdog halt at %.0f ms of silence (tick %.0f ms)", halted_at, tick_ms);
  }
  return {pass, detail};
}

Outcome determinism() {
  bool pass = true;
  int scenarios = 0, detected = 0;
  std::string small_log;
  for (const char* name :
       {"mobility", "mobility_locked", "mapping", "fiducials", "inspection", "light_fixture", "unreachable"}) {
    const auto sc = shipped(name);
    std::ostringstream a, b;
    mission::RunOptions oa, ob;
    oa.log = &a;
    ob.log = &b;
    const auto ma = mission::run_scenario(sc, oa);
    const auto mb = mission::run_scenario(sc, ob);
    std::istringstream in(a.str());
    const auto v = mission::verify_replay(in);
    const bool ok = ma.digest == mb.digest && a.str() == b.str() && v.ok() && v.digest == ma.digest;
    if (!ok) {
      pass = false;
      std::cerr << "  determinism: " << name << " " << v.message << "\n";
    }
    ++scenarios;
    if (std::string(name) == "mobility") small_log = a.str();
  }
  Rng rng(99);
  for (int i = 0; i < kBitFlips; ++i) {
    std::string bad = small_log;
    const auto pos = static_cast<std::size_t>(rng.uniform(0.0, static_cast<double>(bad.size())));
    bad[pos] = static_cast<char>(bad[pos] ^ (1 << static_cast<int>(rng.uniform(0.0, 8.0))));
    std::istringstream in(bad);
    detected += !mission::verify_replay(in).ok();
  }
  return {pass && detected == kBitFlips,
          fmt("%.0f scenarios reproduce and verify, %.0f/%.0f single-bit mutations detected", scenarios, detected,
              kBitFlips)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"hatch-fit", hatch},         {"mobility", mobility},     {"mapping", mapping},
      {"odometry-fiducials", odometry}, {"inspection", inspection}, {"air-sealing", sealing},
      {"arc-geometry", arc},        {"kinematics", kinematics}, {"protocol", protocol},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome r;
    const auto t0 = Clock::now();
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << fmt(" [%.2f s]", seconds_since(t0))
              << std::endl;
    failed += !r.pass;
  }
  return failed ? 1 : 0;
}
