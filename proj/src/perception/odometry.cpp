#include "paris/perception/odometry.hpp"

#include <cmath>

#include "paris/common/error.hpp"
#include "paris/common/rng.hpp"

namespace paris::perception {

PoseEstimate odometry_update(const PoseEstimate& est, const MotionDelta& commanded, const DriftParams& drift,
                             std::uint64_t seed) {
  if (drift.sigma_pos < 0.0 || drift.sigma_heading < 0.0) throw RuntimeError("drift sigmas must be non-negative");
  Rng rng(seed);
  const double axis_sigma = drift.sigma_pos / std::sqrt(2.0);
  MotionDelta d = commanded;
  d.forward += drift.bias + rng.normal(0.0, axis_sigma);
  d.lateral += rng.normal(0.0, axis_sigma);
  d.turn += rng.normal(0.0, drift.sigma_heading);
  PoseEstimate out = est;
  out.pose = integrate_pose(est.pose, d);
  out.uncertainty = std::sqrt(est.uncertainty * est.uncertainty + drift.sigma_pos * drift.sigma_pos) +
                    std::abs(drift.bias);
  return out;
}

Rigid2 fit_rigid2(const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
  if (from.size() != to.size() || from.size() < 2) throw RuntimeError("rigid fit needs two or more pairs");
  Vec2 ca = Vec2::Zero(), cb = Vec2::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    ca += from[i];
    cb += to[i];
  }
  ca /= static_cast<double>(from.size());
  cb /= static_cast<double>(to.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Vec2 a = from[i] - ca, b = to[i] - cb;
    sxx += a.dot(b);
    sxy += a.x() * b.y() - a.y() * b.x();
  }
  Rigid2 r;
  r.angle = std::atan2(sxy, sxx);
  const Eigen::Rotation2Dd rot(r.angle);
  r.translation = cb - rot * ca;
  return r;
}

FiducialCorrection fiducial_correct(const PoseEstimate& est, const std::vector<sensors::FiducialObservation>& obs,
                                    const std::vector<world::FiducialTag>& tag_map, const Iso3& level_T_camera,
                                    double observation_sigma, double time) {
  FiducialCorrection out{est, 0.0};
  if (obs.empty()) return out;
  auto lookup = [&](int id) -> const world::FiducialTag& {
    for (const auto& t : tag_map)
      if (t.id == id) return t;
    throw RuntimeError("unknown fiducial tag " + std::to_string(id));
  };
  std::vector<Vec2> local, world;
  for (const auto& o : obs) {
    const auto& tag = lookup(o.tag_id);
    const Vec3 l = level_T_camera * o.relative_pose.translation();
    local.emplace_back(l.x(), l.y());
    world.emplace_back(tag.pose.translation().x(), tag.pose.translation().y());
  }
  Pose2 p;
  if (obs.size() == 1) {
    const Iso3 world_T_level = lookup(obs[0].tag_id).pose * (level_T_camera * obs[0].relative_pose).inverse();
    p = {world_T_level.translation().x(), world_T_level.translation().y(), wrap_angle(yaw_of(world_T_level))};
  } else {
    const Rigid2 r = fit_rigid2(local, world);
    p = {r.translation.x(), r.translation.y(), wrap_angle(r.angle)};
  }
  double ss = 0.0;
  const Eigen::Rotation2Dd rot(p.heading);
  for (std::size_t i = 0; i < local.size(); ++i) ss += (rot * local[i] + p.position() - world[i]).squaredNorm();
  out.residual_rms = std::sqrt(ss / static_cast<double>(local.size()));
  out.estimate.pose = p;
  out.estimate.uncertainty = observation_sigma;
  out.estimate.last_correction_time = time;
  return out;
}

}  // namespace paris::perception
