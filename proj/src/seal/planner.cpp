#include "paris/seal/planner.hpp"

#include <cmath>

#include "paris/common/error.hpp"

namespace paris::seal {
namespace {

constexpr double kTraceSpacing = 0.005;

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

std::vector<Vec3> geometry_samples(const perception::RoiGeometry& g, double spacing) {
  std::vector<Vec3> out;
  if (const auto* c = std::get_if<perception::CircleRoi>(&g)) {
    const Vec3 u = any_perpendicular(c->normal), v = c->normal.cross(u);
    const int n = std::max(8, static_cast<int>(std::ceil(2.0 * kPi * c->radius / spacing)));
    for (int i = 0; i < n; ++i) {
      const double t = 2.0 * kPi * i / n;
      out.push_back(c->center + c->radius * (std::cos(t) * u + std::sin(t) * v));
    }
  } else if (const auto* s = std::get_if<perception::SegmentRoi>(&g)) {
    const int n = std::max(1, static_cast<int>(std::ceil((s->p1 - s->p0).norm() / spacing)));
    for (int i = 0; i <= n; ++i) out.push_back(s->p0 + (s->p1 - s->p0) * (static_cast<double>(i) / n));
  } else {
    const auto& p = std::get<perception::PatchRoi>(g);
    const Vec3 w = p.normal.cross(p.axis);
    const int nu = std::max(1, static_cast<int>(std::ceil(2.0 * p.extent.x() / spacing)));
    const int nv = std::max(1, static_cast<int>(std::ceil(2.0 * p.extent.y() / spacing)));
    for (int i = 0; i <= nu; ++i)
      for (int j = 0; j <= nv; ++j)
        out.push_back(p.centroid + (-p.extent.x() + 2.0 * p.extent.x() * i / nu) * p.axis +
                      (-p.extent.y() + 2.0 * p.extent.y() * j / nv) * w);
  }
  return out;
}

double max_joint_delta(const robot::ArmJoints& a, const robot::ArmJoints& b) {
  double m = 0.0;
  for (int i = 0; i < robot::kArmDof; ++i)
    m = std::max(m, std::abs(b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)]));
  return m;
}

robot::IkResult solve(const robot::ArmGeometry& arm, const Iso3& arm_T_world, const Vec3& tip, const Vec3& approach,
                      const robot::ArmJoints& seed) {
  return robot::arm_ik(arm, arm_T_world * tip, (arm_T_world.linear() * approach).normalized(), 0.0, seed);
}

}  // namespace

SealPlan plan_roi_trace(const perception::Roi& roi, const robot::ArmGeometry& arm, const Iso3& world_T_arm,
                        const SealOptions& o) {
  if (!(o.standoff > 0.0) || !(o.bead_width > 0.0) || !(o.speed > 0.0)) throw RuntimeError("seal options must be positive");
  SealPlan plan;
  plan.roi_id = roi.id;
  plan.standoff = o.standoff;
  plan.bead_width = o.bead_width;
  plan.speed = o.speed;
  plan.world_T_arm = world_T_arm;
  plan.target = roi.geometry;
  const Vec3 n = perception::roi_normal(roi).normalized();
  plan.approach = -n;
  const std::array<double, 3> sp{o.speed, o.speed, o.speed};
  const Vec3 lift = o.standoff * n;

  if (const auto* c = std::get_if<perception::CircleRoi>(&roi.geometry)) {
    if (!(c->radius > 0.0)) throw RuntimeError("empty ROI geometry");
    Vec3 u = roi.map_frame_pose.linear().col(0);
    u = (u - u.dot(n) * n);
    if (u.norm() < 1e-9) u = any_perpendicular(n);
    u.normalize();
    const Vec3 v = n.cross(u);
    const Vec3 cc = c->center + lift;
    const double r = c->radius;
    plan.segments.push_back(plan_arc(cc + r * u, cc + r * v, cc - r * u, sp));
    plan.segments.push_back(plan_arc(cc - r * u, cc - r * v, cc + r * u, sp));
  } else if (const auto* s = std::get_if<perception::SegmentRoi>(&roi.geometry)) {
    const double len = (s->p1 - s->p0).norm();
    if (!(len > 0.0)) throw RuntimeError("empty ROI geometry");
    const double sag = std::min(0.01, len / 10.0);
    plan.segments.push_back(plan_arc(s->p0 + lift, 0.5 * (s->p0 + s->p1) + lift + sag * n, s->p1 + lift, sp));
  } else {
    const auto& p = std::get<perception::PatchRoi>(roi.geometry);
    if (!(p.extent.x() > 0.0) && !(p.extent.y() > 0.0)) throw RuntimeError("empty ROI geometry");
    const Vec3 w = n.cross(p.axis).normalized();
    const double ex = std::max(p.extent.x(), 0.5 * o.bead_width);
    const int rows = static_cast<int>(std::ceil(2.0 * p.extent.y() / o.bead_width)) + 1;
    const double span = (rows - 1) * o.bead_width;
    for (int k = 0; k < rows; ++k) {
      const Vec3 off = p.centroid + lift + (-0.5 * span + k * o.bead_width) * w;
      const double dir = (k % 2 == 0) ? 1.0 : -1.0;
      const Vec3 a = off - dir * ex * p.axis, b = off + dir * ex * p.axis;
      const double sag = std::min(0.01, 2.0 * ex / 10.0);
      plan.segments.push_back(plan_arc(a, 0.5 * (a + b) + sag * n, b, sp));
    }
  }

  double foam = 0.0;
  for (const auto& seg : plan.segments) foam += seg.length() * o.bead_width;
  plan.estimated_foam = foam;

  const Iso3 arm_T_world = world_T_arm.inverse();
  plan.reachable = true;
  robot::ArmJoints seed{};
  bool have_seed = false;
  for (const auto& seg : plan.segments) {
    for (const auto& p : seg.sample(o.sample_spacing)) {
      const auto ik = have_seed ? solve(arm, arm_T_world, p, plan.approach, seed)
                                : robot::arm_ik(arm, arm_T_world * p, (arm_T_world.linear() * plan.approach).normalized());
      if (!ik.ok) {
        plan.reachable = false;
        plan.first_unreachable = p;
        return plan;
      }
      seed = ik.joints;
      have_seed = true;
    }
  }
  return plan;
}

double SealJob::Coverage::fraction() const {
  if (samples.empty()) return 0.0;
  return static_cast<double>(std::count(covered.begin(), covered.end(), 1)) / static_cast<double>(samples.size());
}

SealJob::SealJob(SealPlan plan, const world::AtticScene& scene, const robot::ArmGeometry& arm,
                 const robot::RobotState& state, const Iso3& world_T_plan)
    : plan_(std::move(plan)), arm_(arm), world_T_plan_(world_T_plan) {
  if (!plan_.reachable) throw RuntimeError("unreachable");
  if (!(state.canister_remaining > 0.0)) throw RuntimeError("canister_empty");
  canister_start_ = state.canister_remaining;

  const Iso3 arm_T_world = plan_.world_T_arm.inverse();
  robot::ArmJoints q = state.arm_joints;
  std::optional<Vec3> last_tip;
  for (std::size_t i = 0; i < plan_.segments.size(); ++i) {
    const auto& seg = plan_.segments[i];
    if (!last_tip || (*last_tip - seg.waypoints[0]).norm() > 1e-9) {
      const auto ik = solve(arm_, arm_T_world, seg.waypoints[0], plan_.approach, q);
      if (!ik.ok) throw RuntimeError("unreachable");
      Leg slew;
      slew.q_from = q;
      slew.q_to = ik.joints;
      slew.slew_time = max_joint_delta(q, ik.joints) / arm_.max_joint_speed;
      legs_.push_back(slew);
      q = ik.joints;
    }
    Leg bead;
    bead.points = seg.sample(kTraceSpacing);
    bead.cumulative.push_back(0.0);
    for (std::size_t k = 1; k < bead.points.size(); ++k)
      bead.cumulative.push_back(bead.cumulative.back() + (bead.points[k] - bead.points[k - 1]).norm());
    bead.arc = static_cast<int>(i);
    if (bead.cumulative.back() > 0.0) bead.foam_scale = seg.length() / bead.cumulative.back();
    bead.bead = true;
    total_path_ += bead.cumulative.back();
    legs_.push_back(std::move(bead));
    last_tip = seg.waypoints[2];
  }

  const double spacing = 0.001;
  roi_cov_.samples = geometry_samples(plan_.target, spacing);
  roi_cov_.covered.assign(roi_cov_.samples.size(), 0);
  for (const auto& leak : scene.leaks) {
    Coverage c;
    c.samples = world::centerline_samples(leak.geometry, spacing);
    c.covered.assign(c.samples.size(), 0);
    leak_cov_.emplace_back(leak.id, std::move(c));
  }
  if (legs_.empty()) finished_ = true;
}

Vec3 SealJob::tip_at(const Leg& leg, double s) const {
  const auto& cum = leg.cumulative;
  if (s <= 0.0) return leg.points.front();
  if (s >= cum.back()) return leg.points.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - cum.begin());
  const double f = (s - cum[k - 1]) / (cum[k] - cum[k - 1]);
  return leg.points[k - 1] + f * (leg.points[k] - leg.points[k - 1]);
}

void SealJob::sweep(const Vec3& a_tip, const Vec3& b_tip) {
  const Vec3 shift = plan_.standoff * plan_.approach;
  const Vec3 a = a_tip + shift, b = b_tip + shift;
  const double reach = 0.5 * plan_.bead_width + 1e-9;
  auto mark = [&](Coverage& c, const Vec3& p, const Vec3& q) {
    for (std::size_t i = 0; i < c.samples.size(); ++i)
      if (!c.covered[i] && point_segment_distance(c.samples[i], p, q) <= reach) c.covered[i] = 1;
  };
  mark(roi_cov_, a, b);
  const Vec3 wa = world_T_plan_ * a, wb = world_T_plan_ * b;
  for (auto& [id, c] : leak_cov_) mark(c, wa, wb);
}

void SealJob::set_arm(robot::RobotState& state, const Vec3& tip) {
  const auto ik = solve(arm_, plan_.world_T_arm.inverse(), tip, plan_.approach, state.arm_joints);
  if (ik.ok) state.arm_joints = ik.joints;
}

bool SealJob::step(robot::RobotState& state, double dt) {
  if (finished_) return true;
  double remaining = dt;
  while (remaining > 0.0 && !finished_) {
    Leg& leg = legs_[leg_];
    if (leg.points.empty()) {
      state.trigger_on = false;
      const double adv = std::min(remaining, leg.slew_time - leg_pos_);
      leg_pos_ += adv;
      remaining -= adv;
      const double f = leg.slew_time > 0.0 ? std::min(1.0, leg_pos_ / leg.slew_time) : 1.0;
      for (int i = 0; i < robot::kArmDof; ++i) {
        const auto k = static_cast<std::size_t>(i);
        state.arm_joints[k] = leg.q_from[k] + f * (leg.q_to[k] - leg.q_from[k]);
      }
      if (leg_pos_ >= leg.slew_time) {
        ++leg_;
        leg_pos_ = 0.0;
      }
    } else {
      state.trigger_on = leg.bead;
      const double len = leg.cumulative.back();
      double v = plan_.speed;
      if (leg.arc >= 0) {
        const auto& arc = plan_.segments[static_cast<std::size_t>(leg.arc)];
        v = arc.speed_at(arc.length() * (len > 0.0 ? leg_pos_ / len : 1.0));
      }
      double s_end = std::min(len, leg_pos_ + v * remaining);
      if (leg.bead) {
        const double available = canister_start_ - foam_used_;
        if ((s_end - leg_pos_) * leg.foam_scale * plan_.bead_width > available) {
          s_end = leg_pos_ + available / (leg.foam_scale * plan_.bead_width);
          aborted_ = "canister_empty";
        }
      }
      // Sweep through every polyline vertex passed.
      Vec3 prev = tip_at(leg, leg_pos_);
      const auto first = std::upper_bound(leg.cumulative.begin(), leg.cumulative.end(), leg_pos_);
      for (auto it = first; it != leg.cumulative.end() && *it < s_end; ++it) {
        const Vec3 p = leg.points[static_cast<std::size_t>(it - leg.cumulative.begin())];
        if (leg.bead) sweep(prev, p);
        prev = p;
      }
      const Vec3 end = tip_at(leg, s_end);
      if (leg.bead) sweep(prev, end);
      const double moved = s_end - leg_pos_;
      if (leg.bead) {
        if (aborted_)
          foam_used_ = canister_start_;
        else
          foam_used_ += moved * leg.foam_scale * plan_.bead_width;
      }
      state.canister_remaining = canister_start_ - foam_used_;
      done_path_ += moved;
      remaining = s_end < len ? 0.0 : remaining - moved / v;
      leg_pos_ = s_end;
      set_arm(state, end);
      if (aborted_) {
        finished_ = true;
      } else if (leg_pos_ >= len) {
        ++leg_;
        leg_pos_ = 0.0;
      }
    }
    if (leg_ >= legs_.size()) finished_ = true;
  }
  elapsed_ += dt - std::max(0.0, remaining);
  if (finished_) state.trigger_on = false;
  return finished_;
}

void SealJob::abort(robot::RobotState& state, const std::string& reason) {
  if (finished_) return;
  aborted_ = reason;
  finished_ = true;
  state.trigger_on = false;
}

double SealJob::progress() const {
  if (finished_ && !aborted_) return 1.0;
  return total_path_ > 0.0 ? done_path_ / total_path_ : 0.0;
}

SealResult SealJob::result() const {
  SealResult r;
  r.roi_id = plan_.roi_id;
  r.coverage_fraction = roi_cov_.fraction();
  r.foam_used = foam_used_;
  r.duration = elapsed_;
  r.aborted_reason = aborted_;
  return r;
}

std::map<std::string, double> SealJob::leak_coverage() const {
  std::map<std::string, double> m;
  for (const auto& [id, c] : leak_cov_) m[id] = c.fraction();
  return m;
}

SealResult execute_plan(world::AtticScene& scene, const robot::ArmGeometry& arm, robot::RobotState& state,
                        const SealPlan& plan, double dt) {
  if (!(dt > 0.0)) throw RuntimeError("dt must be positive");
  SealJob job(plan, scene, arm, state);
  while (!job.finished()) {
    job.step(state, dt);
    state.time += dt;
  }
  for (const auto& [id, f] : job.leak_coverage())
    if (f > 0.0) world::apply_seal_coverage_in_place(scene, id, f, state.time);
  return job.result();
}

robot::RobotState canister_swap(const robot::RobotState& state) {
  if (!state.stationary()) throw RuntimeError("canister swap requires a stationary robot");
  robot::RobotState s = state;
  s.canister_remaining = robot::kCanisterCapacity;
  ++s.canister_swaps;
  return s;
}

Json seal_plan_to_json(const SealPlan& plan) {
  Json segs = Json::array();
  for (const auto& s : plan.segments) {
    Json w = Json::array();
    for (const auto& p : s.waypoints) w.push_back(vec_json(p));
    segs.push_back({{"waypoints", w},
                    {"speeds", Json::array({s.speeds[0], s.speeds[1], s.speeds[2]})},
                    {"center", vec_json(s.center)},
                    {"radius", s.radius},
                    {"degenerate_line", s.degenerate_line}});
  }
  Json j = {{"roi_id", plan.roi_id},         {"segments", segs},
            {"standoff", plan.standoff},     {"bead_width", plan.bead_width},
            {"estimated_foam", plan.estimated_foam}, {"reachable", plan.reachable}};
  j["first_unreachable"] = plan.first_unreachable ? vec_json(*plan.first_unreachable) : Json(nullptr);
  return j;
}

Json seal_result_to_json(const SealResult& r) {
  Json j = {{"roi_id", r.roi_id},
            {"coverage_fraction", r.coverage_fraction},
            {"foam_used", r.foam_used},
            {"duration", r.duration}};
  j["aborted_reason"] = r.aborted_reason ? Json(*r.aborted_reason) : Json(nullptr);
  return j;
}

}  // namespace paris::seal
