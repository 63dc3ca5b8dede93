#pragma once

#include <cstdint>
#include <vector>

#include "paris/common/geometry.hpp"
#include "paris/sensors/camera.hpp"
#include "paris/world/scene.hpp"

namespace paris::perception {

struct PoseEstimate {
  Pose2 pose;
  double uncertainty = 0.0;  ///< metres, RMS position error proxy
  double last_correction_time = 0.0;
};

struct DriftParams {
  double sigma_pos = 0.0;      ///< m per step, total over both axes
  double sigma_heading = 0.0;  ///< rad per step
  double bias = 0.0;           ///< m per step along the heading
};

/// Dead-reckoning step: commanded motion plus bias plus Gaussian noise.
/// Uncertainty grows as sqrt(u^2 + sigma_pos^2) + |bias|.
PoseEstimate odometry_update(const PoseEstimate& est, const MotionDelta& commanded, const DriftParams& drift,
                             std::uint64_t seed);

struct FiducialCorrection {
  PoseEstimate estimate;
  double residual_rms = 0.0;  ///< m, tag position residual after the fit
};

/// Re-solves the pose from tag observations. `level_T_camera` is the camera
/// pose in the robot's level frame (planar pose at z = 0, attitude from the
/// contact model). One tag: direct inversion of its full pose. Several: 2D
/// least-squares rigid fit on tag positions. Uncertainty resets to
/// `observation_sigma`. Throws RuntimeError for a tag missing from tag_map.
/// Empty observations return the estimate unchanged.
FiducialCorrection fiducial_correct(const PoseEstimate& est, const std::vector<sensors::FiducialObservation>& obs,
                                    const std::vector<world::FiducialTag>& tag_map, const Iso3& level_T_camera,
                                    double observation_sigma, double time);

/// Least-squares 2D rigid transform (rotation angle, translation) taking
/// `from` onto `to`. Needs at least two points.
struct Rigid2 {
  double angle = 0.0;
  Vec2 translation = Vec2::Zero();
};
Rigid2 fit_rigid2(const std::vector<Vec2>& from, const std::vector<Vec2>& to);

}  // namespace paris::perception
