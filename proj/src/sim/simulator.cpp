#include "paris/sim/simulator.hpp"

#include <cmath>

#include "paris/common/error.hpp"
#include "paris/common/hash.hpp"
#include "paris/common/rng.hpp"
#include "paris/robot/arm.hpp"

namespace paris::sim {
namespace {

enum SeedStream : std::uint64_t { kOdometry = 1, kFrontCam, kRearCam, kArmThermal, kFiducial, kInspectDepth, kInspectThermal };

constexpr double kMaxJog = 0.5;  // rad per ArmJog

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

MotionDelta delta_between(const Pose2& a, const Pose2& b) {
  const double turn = wrap_angle(b.heading - a.heading);
  const double mid = a.heading + 0.5 * turn;
  const double dx = b.x - a.x, dy = b.y - a.y;
  return {dx * std::cos(mid) + dy * std::sin(mid), -dx * std::sin(mid) + dy * std::cos(mid), turn};
}

Json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"heading", p.heading}}; }

CommandError err(std::string code, std::string msg) { return {std::move(code), std::move(msg)}; }

}  // namespace

Simulator::Simulator(Scenario scenario) : sc_(std::move(scenario)), scene_(sc_.scene), map_(sc_.sensing.voxel_size) {
  state_.base_pose = sc_.initial_pose;
  state_.flipper_angles = sc_.initial_flippers;
  const auto rest = robot::rest_on_terrain(scene_, sc_.robot, state_.base_pose, state_.flipper_angles);
  state_.base_z = rest.z;
  state_.pitch = rest.pitch;
  contacts_ = rest.contacts;
  est_.pose = sc_.initial_pose;
}

Simulator::~Simulator() = default;

bool Simulator::moving() const {
  if (!cmd_.is_zero() || !state_.stationary()) return true;
  return arm_target_.has_value() || job_ != nullptr || state_.trigger_on;
}

Iso3 Simulator::level_T_base() const {
  return make_iso(Vec3(0.0, 0.0, state_.base_z), rpy_to_matrix(state_.roll, -state_.pitch, 0.0));
}

Iso3 Simulator::map_T_base() const { return est_.pose.to_iso3(0.0) * level_T_base(); }

Iso3 Simulator::world_T_stereo() const {
  const auto& arm = sc_.robot.arm;
  return state_.world_T_base() * arm.mount * robot::arm_flange(arm, state_.arm_joints) * arm.stereo_mount;
}

std::vector<perception::ThermalPoint> Simulator::thermal_points() const {
  std::vector<perception::ThermalPoint> out;
  out.reserve(thermal_.size());
  for (const auto& [key, c] : thermal_) {
    perception::ThermalPoint p;
    p.position = c.position_sum / static_cast<double>(c.count);
    p.temperature = c.temp_sum / static_cast<double>(c.count);
    out.push_back(p);
  }
  return out;
}

std::optional<std::size_t> Simulator::resolve_roi(const std::string& id) const {
  if (id.rfind("leak:", 0) == 0) {
    const std::string leak = id.substr(5);
    const auto m = perception::match_rois(rois_, scene_.leaks);
    for (const auto& [ri, li] : m.pairs)
      if (scene_.leaks[static_cast<std::size_t>(li)].id == leak) return static_cast<std::size_t>(ri);
    return std::nullopt;
  }
  for (std::size_t i = 0; i < rois_.size(); ++i)
    if (rois_[i].id == id) return i;
  return std::nullopt;
}

std::optional<seal::SealPlan> Simulator::plan_for(const perception::Roi& roi) const {
  try {
    return seal::plan_roi_trace(roi, sc_.robot.arm, map_T_base() * sc_.robot.arm.mount, sc_.seal);
  } catch (const RuntimeError&) {
    return std::nullopt;
  }
}

std::optional<CommandError> Simulator::validate(const Command& c, Mode mode, bool seal_pending) const {
  const auto& g = sc_.robot;
  const bool busy = job_ != nullptr || seal_pending;
  auto need = [&](Mode m, const char* what) -> std::optional<CommandError> {
    if (mode != m) return err("mode", std::string(what) + " requires " + to_string(m) + " mode");
    return std::nullopt;
  };
  return std::visit(
      Overload{
          [&](const Drive& d) -> std::optional<CommandError> {
            if (auto e = need(Mode::drive, "drive")) return e;
            if (!std::isfinite(d.v) || !std::isfinite(d.w) || std::abs(d.v) > g.max_linear_velocity + 1e-12 ||
                std::abs(d.w) > g.max_angular_velocity + 1e-12)
              return err("limit", "drive velocity outside limits");
            return std::nullopt;
          },
          [&](const Flipper& f) -> std::optional<CommandError> {
            if (auto e = need(Mode::drive, "flipper")) return e;
            if (f.index < 0 || f.index > 3) return err("limit", "flipper index must be 0-3");
            if (!std::isfinite(f.rate) || std::abs(f.rate) > g.max_flipper_rate + 1e-12)
              return err("limit", "flipper rate outside limits");
            return std::nullopt;
          },
          [&](const ArmJog& j) -> std::optional<CommandError> {
            if (auto e = need(Mode::arm, "arm_jog")) return e;
            if (job_) return err("busy", "seal in progress");
            if (j.joint < 0 || j.joint >= robot::kArmDof) return err("limit", "arm joint must be 0-4");
            if (!std::isfinite(j.delta) || std::abs(j.delta) > kMaxJog) return err("limit", "jog step too large");
            robot::ArmJoints q = arm_target_.value_or(state_.arm_joints);
            q[static_cast<std::size_t>(j.joint)] += j.delta;
            if (!g.arm.within_limits(q)) return err("limit", "arm joint limit violation");
            return std::nullopt;
          },
          [&](const ArmGoto& a) -> std::optional<CommandError> {
            if (auto e = need(Mode::arm, "arm_goto")) return e;
            if (job_) return err("busy", "seal in progress");
            if (!a.position.allFinite() || !a.approach.allFinite() || a.approach.norm() < 1e-9)
              return err("invalid", "arm target must be finite with a non-zero approach");
            const Iso3 frame_T_arm = a.map_frame ? map_T_base() * g.arm.mount : g.arm.mount;
            const Iso3 arm_T_frame = frame_T_arm.inverse();
            const auto ik = robot::arm_ik(g.arm, arm_T_frame * a.position,
                                          (arm_T_frame.linear() * a.approach).normalized(), 0.0, state_.arm_joints);
            if (!ik.ok) return err("unreachable", "arm target " + ik.error);
            return std::nullopt;
          },
          [&](const Trigger&) -> std::optional<CommandError> {
            if (auto e = need(Mode::arm, "trigger")) return e;
            if (job_) return err("busy", "seal in progress");
            return std::nullopt;
          },
          [&](const ModeToggle& m) -> std::optional<CommandError> {
            if (m.mode == Mode::drive && busy) return err("busy", "seal in progress");
            return std::nullopt;
          },
          [&](const RequestSeal& r) -> std::optional<CommandError> {
            if (auto e = need(Mode::arm, "request_seal")) return e;
            if (busy) return err("busy", "seal in progress");
            const auto idx = resolve_roi(r.roi_id);
            if (!idx) return err("unknown_roi", "unknown ROI '" + r.roi_id + "'");
            if (!(state_.canister_remaining > 0.0)) return err("canister_empty", "canister is empty");
            const auto plan = plan_for(rois_[*idx]);
            if (!plan || !plan->reachable) return err("unreachable", "ROI '" + r.roi_id + "' is out of reach");
            return std::nullopt;
          },
          [&](const SwapCanister&) -> std::optional<CommandError> {
            if (job_) return err("busy", "seal in progress");
            if (!state_.stationary() || cmd_.linear_velocity != 0.0 || cmd_.angular_velocity != 0.0)
              return err("robot_moving", "canister swap requires a stationary robot");
            return std::nullopt;
          },
          [&](const Inspect&) -> std::optional<CommandError> {
            if (auto e = need(Mode::arm, "inspect")) return e;
            if (job_) return err("busy", "seal in progress");
            return std::nullopt;
          },
          [](const auto&) -> std::optional<CommandError> { return std::nullopt; }},
      c);
}

void Simulator::apply(const Command& c, Events& events) {
  const auto& g = sc_.robot;
  std::visit(Overload{[&](const Drive& d) {
                        cmd_.linear_velocity = d.v;
                        cmd_.angular_velocity = d.w;
                      },
                      [&](const Flipper& f) { cmd_.flipper_rates[static_cast<std::size_t>(f.index)] = f.rate; },
                      [&](const ArmJog& j) {
                        robot::ArmJoints q = arm_target_.value_or(state_.arm_joints);
                        q[static_cast<std::size_t>(j.joint)] += j.delta;
                        arm_target_ = q;
                      },
                      [&](const ArmGoto& a) {
                        const Iso3 frame_T_arm = a.map_frame ? map_T_base() * g.arm.mount : g.arm.mount;
                        const Iso3 arm_T_frame = frame_T_arm.inverse();
                        const auto ik =
                            robot::arm_ik(g.arm, arm_T_frame * a.position,
                                          (arm_T_frame.linear() * a.approach).normalized(), 0.0, state_.arm_joints);
                        if (ik.ok) arm_target_ = ik.joints;
                      },
                      [&](const Trigger& t) { state_.trigger_on = t.on; },
                      [&](const ModeToggle& m) {
                        if (m.mode == mode_) return;
                        if (m.mode == Mode::arm) {
                          cmd_ = robot::BaseCommand{};
                        } else {
                          arm_target_.reset();
                          state_.trigger_on = false;
                        }
                        mode_ = m.mode;
                        events.push_back({{"type", "mode"}, {"mode", to_string(mode_)}});
                      },
                      [&](const RequestSeal& r) {
                        const auto idx = resolve_roi(r.roi_id);
                        std::optional<seal::SealPlan> plan;
                        if (idx) plan = plan_for(rois_[*idx]);
                        if (!idx || !plan || !plan->reachable || !(state_.canister_remaining > 0.0)) {
                          events.push_back({{"type", "seal_rejected"}, {"roi_id", r.roi_id}});
                          return;
                        }
                        const Iso3 map_T_arm = map_T_base() * g.arm.mount;
                        const Iso3 world_T_arm = state_.world_T_base() * g.arm.mount;
                        arm_target_.reset();
                        state_.trigger_on = false;
                        job_ = std::make_unique<seal::SealJob>(*plan, scene_, g.arm, state_,
                                                               world_T_arm * map_T_arm.inverse());
                        events.push_back({{"type", "seal_started"},
                                          {"roi_id", plan->roi_id},
                                          {"plan", seal::seal_plan_to_json(*plan)}});
                      },
                      [&](const SwapCanister&) {
                        state_ = seal::canister_swap(state_);
                        events.push_back({{"type", "canister_swapped"}, {"swaps", state_.canister_swaps}});
                      },
                      [&](const EStop&) { halt("estop", events); },
                      [&](const Inspect&) { inspect(events); },
                      [](const auto&) {}},
             c);
}

void Simulator::halt(const std::string& reason, Events& events) {
  cmd_ = robot::BaseCommand{};
  arm_target_.reset();
  state_.trigger_on = false;
  if (job_) {
    job_->abort(state_, reason);
    finish_seal(events);
  }
  events.push_back({{"type", "halt"}, {"reason", reason}});
}

void Simulator::finish_seal(Events& events) {
  const auto res = job_->result();
  Json cov = Json::object();
  for (const auto& [id, f] : job_->leak_coverage()) {
    cov[id] = f;
    if (f > 0.0) world::apply_seal_coverage_in_place(scene_, id, f, state_.time);
  }
  foam_used_ += res.foam_used;
  seal_results_.push_back(res);
  Json ev = seal::seal_result_to_json(res);
  ev["type"] = "seal_result";
  ev["leak_coverage"] = cov;
  events.push_back(ev);
  job_.reset();
}

void Simulator::step(Events& events) {
  ++tick_;
  const double dt = sc_.dt();
  const int telemetry_every = std::max(1, sc_.tick_hz / 10);

  if (job_) {
    const bool done = job_->step(state_, dt);
    if (done) {
      finish_seal(events);
    } else if (tick_ % telemetry_every == 0) {
      events.push_back({{"type", "seal_progress"}, {"roi_id", job_->plan().roi_id}, {"progress", job_->progress()}});
    }
  } else if (arm_target_) {
    const double max_step = sc_.robot.arm.max_joint_speed * dt;
    bool reached = true;
    for (std::size_t i = 0; i < robot::kArmDof; ++i) {
      const double d = (*arm_target_)[i] - state_.arm_joints[i];
      if (std::abs(d) > max_step) {
        state_.arm_joints[i] += std::copysign(max_step, d);
        reached = false;
      } else {
        state_.arm_joints[i] = (*arm_target_)[i];
      }
    }
    if (reached) arm_target_.reset();
  }

  robot::BaseCommand c = cmd_;
  if (sc_.flippers_locked) c.flipper_rates = {};
  const bool was_safe = contacts_.safe;
  const bool was_stuck = stuck_;
  if (!c.is_zero() || !state_.stationary()) {
    const Pose2 before = state_.base_pose;
    const auto r = robot::step_base(scene_, sc_.robot, state_, c, dt);
    state_ = r.state;
    contacts_ = r.contacts;
    stuck_ = r.stuck;
    if (!(state_.base_pose == before)) {
      est_ = perception::odometry_update(est_, delta_between(before, state_.base_pose), sc_.odometry,
                                         derive_seed(sc_.seed, static_cast<std::uint64_t>(tick_), kOdometry));
    }
  } else {
    stuck_ = false;
  }
  state_.time = static_cast<double>(tick_) / sc_.tick_hz;
  if (!contacts_.safe) ++contact_violations_;
  if (stuck_) ++stuck_ticks_;
  if (contacts_.safe != was_safe) events.push_back({{"type", "contact"}, {"safe", contacts_.safe}, {"joists", contacts_.count}});
  if (stuck_ && !was_stuck) events.push_back({{"type", "stuck"}, {"pose", pose_json(state_.base_pose)}});

  if (sc_.fiducials.enabled && !scene_.tags.empty() && tick_ % sc_.fiducials.every_ticks == 0) {
    const auto k = sensors::rgbd_intrinsics();
    std::vector<sensors::FiducialObservation> best;
    Iso3 best_mount = Iso3::Identity();
    std::uint64_t cam = 0;
    for (const auto& m : sc_.robot.base_cameras) {
      auto obs = sensors::observe_fiducials(scene_, state_.world_T_base() * m.mount, k, sc_.fiducials.sigma_pos,
                                            sc_.fiducials.sigma_rot,
                                            derive_seed(sc_.seed, static_cast<std::uint64_t>(tick_), kFiducial, cam++));
      if (obs.size() > best.size()) {
        best = std::move(obs);
        best_mount = m.mount;
      }
    }
    if (!best.empty()) {
      est_ = perception::fiducial_correct(est_, best, scene_.tags, level_T_base() * best_mount,
                                          sc_.fiducials.sigma_pos, state_.time)
                 .estimate;
    }
  }

  if (tick_ % sc_.sensing.frame_stride == 0) render_frame(events);
}

void Simulator::render_frame(Events&) {
  ++frame_ticks_;
  const auto& streams = sc_.sensing.streams;
  auto wants = [&](Stream s) { return std::find(streams.begin(), streams.end(), s) != streams.end(); };
  FrameSet fs;
  fs.tick = tick_;
  fs.time = state_.time;
  const auto k = sensors::rgbd_intrinsics();
  const std::uint64_t t = static_cast<std::uint64_t>(tick_);
  for (std::size_t ci = 0; ci < sc_.robot.base_cameras.size() && ci < 2; ++ci) {
    const Stream cs = ci == 0 ? Stream::front_color : Stream::rear_color;
    const Stream ds = ci == 0 ? Stream::front_depth : Stream::rear_depth;
    if (!sc_.sensing.mapping && !wants(cs) && !wants(ds)) continue;
    const auto& mount = sc_.robot.base_cameras[ci].mount;
    sensors::DepthImage depth;
    sensors::ColorImage color;
    sensors::render_rgbd(scene_, state_.world_T_base() * mount, k,
                         derive_seed(sc_.seed, t, ci == 0 ? kFrontCam : kRearCam), sc_.sensing.depth_noise, depth, color);
    if (sc_.sensing.mapping) {
      const auto cloud = sensors::stereo_pointcloud(depth, k, level_T_base() * mount, &color, sc_.sensing.map_pixel_stride);
      perception::integrate_map(map_, cloud, est_.pose);
      map_digest_.reset();
    }
    if (wants(cs)) (ci == 0 ? fs.front_color : fs.rear_color) = std::move(color);
    if (wants(ds)) (ci == 0 ? fs.front_depth : fs.rear_depth) = std::move(depth);
  }
  if (wants(Stream::arm_thermal)) {
    auto spec = sensors::thermal_spec();
    spec.noise_sigma = sc_.sensing.thermal_noise;
    fs.arm_thermal = sensors::render_thermal(scene_, world_T_stereo() * sc_.robot.arm.stereo_T_thermal, spec,
                                             state_.time, derive_seed(sc_.seed, t, kArmThermal));
  }
  if (wants(Stream::arm_color)) fs.arm_color = sensors::render_color(scene_, world_T_stereo(), sensors::stereo_intrinsics());
  if (on_frames) on_frames(fs);
}

void Simulator::inspect(Events& events) {
  const auto& arm = sc_.robot.arm;
  const std::uint64_t t = static_cast<std::uint64_t>(tick_);
  const auto sk = sensors::stereo_intrinsics();
  const Iso3 w_stereo = world_T_stereo();
  const auto depth = sensors::render_depth(scene_, w_stereo, sk, derive_seed(sc_.seed, t, kInspectDepth),
                                           sc_.sensing.depth_noise);
  std::vector<Vec3> pts;
  for (const auto& p : sensors::stereo_pointcloud(depth, sk, Iso3::Identity())) pts.push_back(p.position);
  auto spec = sensors::thermal_spec();
  spec.noise_sigma = sc_.sensing.thermal_noise;
  const auto thermal = sensors::render_thermal(scene_, w_stereo * arm.stereo_T_thermal, spec, state_.time,
                                               derive_seed(sc_.seed, t, kInspectThermal));
  const auto fused = perception::fuse_thermal(pts, thermal, arm.stereo_T_thermal, spec.intrinsics);
  const Iso3 map_T_stereo = map_T_base() * arm.mount * robot::arm_flange(arm, state_.arm_joints) * arm.stereo_mount;
  const double vs = sc_.sensing.thermal_voxel;
  for (const auto& f : fused) {
    const Vec3 p = map_T_stereo * f.position;
    const perception::VoxelIndex key{static_cast<std::int64_t>(std::floor(p.x() / vs)),
                                     static_cast<std::int64_t>(std::floor(p.y() / vs)),
                                     static_cast<std::int64_t>(std::floor(p.z() / vs))};
    auto& cell = thermal_[key];
    cell.position_sum += p;
    cell.temp_sum += f.temperature;
    ++cell.count;
    map_.add_temperature(p, f.temperature);
  }
  map_digest_.reset();
  auto params = sc_.roi;
  params.viewpoint = map_T_stereo.translation();
  rois_ = perception::detect_rois(thermal_points(), params);
  events.push_back({{"type", "roi_list"}, {"rois", perception::rois_to_json(rois_)}});
}

double Simulator::signal_strength() const {
  const double d = (state_.base_pose.position() - scene_.hatch.position).norm();
  return std::clamp(100.0 * std::exp(-d / 4.0), 0.0, 100.0);
}

Json Simulator::telemetry() const {
  static const robot::BatteryModel battery;
  Json seal = nullptr;
  if (job_) seal = {{"roi_id", job_->plan().roi_id}, {"progress", job_->progress()}};
  Json flippers = Json::array(), joints = Json::array();
  for (double a : state_.flipper_angles) flippers.push_back(a);
  for (double q : state_.arm_joints) joints.push_back(q);
  return {{"type", "telemetry"},
          {"tick", tick_},
          {"time", state_.time},
          {"battery_voltage", battery.voltage(state_.battery_charge)},
          {"signal_strength", signal_strength()},
          {"pose_estimate", {{"x", est_.pose.x}, {"y", est_.pose.y}, {"heading", est_.pose.heading}, {"uncertainty", est_.uncertainty}}},
          {"canister_remaining", state_.canister_remaining},
          {"mode", to_string(mode_)},
          {"contact_safe", contacts_.safe},
          {"active_seal", seal},
          {"watchdog_hold", watchdog_hold_},
          {"stuck", stuck_},
          {"trigger", state_.trigger_on},
          {"flippers", flippers},
          {"arm_joints", joints}};
}

std::uint64_t Simulator::state_hash() const {
  Fnv1a h;
  h.u64(sc_.seed);
  h.i64(tick_);
  h.f64(state_.time);
  h.u64(mode_ == Mode::drive ? 0 : 1);
  const auto& s = state_;
  for (double v : {s.base_pose.x, s.base_pose.y, s.base_pose.heading, s.base_z, s.roll, s.pitch, s.track_left,
                   s.track_right, s.canister_remaining, s.battery_charge})
    h.f64(v);
  for (double a : s.flipper_angles) h.f64(a);
  for (double q : s.arm_joints) h.f64(q);
  h.boolean(s.trigger_on);
  h.i64(s.canister_swaps);
  h.f64(cmd_.linear_velocity);
  h.f64(cmd_.angular_velocity);
  for (double r : cmd_.flipper_rates) h.f64(r);
  h.boolean(arm_target_.has_value());
  if (arm_target_)
    for (double q : *arm_target_) h.f64(q);
  h.f64(est_.pose.x);
  h.f64(est_.pose.y);
  h.f64(est_.pose.heading);
  h.f64(est_.uncertainty);
  h.f64(est_.last_correction_time);
  if (!map_digest_) map_digest_ = map_.digest();
  h.u64(*map_digest_);
  h.u64(thermal_.size());
  h.str(perception::rois_to_json(rois_).dump());
  h.boolean(job_ != nullptr);
  if (job_) h.f64(job_->progress());
  for (const auto& l : scene_.leaks) {
    h.str(l.id);
    h.f64(l.sealed_fraction);
    h.u64(l.seal_history.size());
  }
  h.boolean(contacts_.safe);
  h.i64(contacts_.count);
  h.boolean(stuck_);
  h.boolean(watchdog_hold_);
  h.i64(contact_violations_);
  h.f64(foam_used_);
  return h.value();
}

}  // namespace paris::sim
