#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "paris/common/geometry.hpp"
#include "paris/world/scene.hpp"

namespace paris::sensors {

/// Pinhole model; pixel (u, v) has its centre at integer coordinates, so the
/// principal ray passes through pixel (cx, cy). Camera frame: x right, y down,
/// z forward.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  double min_range = 0.0;
  double max_range = 10.0;

  static CameraIntrinsics from_fov(int width, int height, double hfov_rad, double vfov_rad, double min_range,
                                   double max_range);
  /// Throws ValidationError naming the broken constraint.
  void validate() const;
  /// Pixel coordinates of a camera-frame point; nullopt when z <= 0.
  std::optional<Vec2> project(const Vec3& p) const;
  /// Camera-frame point at z-depth `depth` through pixel (u, v).
  Vec3 back_project(double u, double v, double depth) const;
  bool in_image(const Vec2& px) const;
};

struct ThermalCamSpec {
  CameraIntrinsics intrinsics;
  double noise_sigma = 0.1;  ///< K
};

/// Base RGBD pair: 640x480, 87 x 58 deg, 0.3-3.0 m.
CameraIntrinsics rgbd_intrinsics();
/// Arm stereo module (ideal rectified, left camera): 160x120.
CameraIntrinsics stereo_intrinsics();
ThermalCamSpec thermal_spec();

template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
  T& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  const T& at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
};

using Rgb = std::array<std::uint8_t, 3>;
using DepthImage = Image<double>;  ///< z-depth in metres, 0 = invalid
using ColorImage = Image<Rgb>;
using ThermalImage = Image<double>;  ///< kelvin

struct FiducialObservation {
  int tag_id = 0;
  Iso3 relative_pose = Iso3::Identity();  ///< camera -> tag
  bool noise_applied = false;
};

struct Frame {
  double timestamp = 0.0;
  Iso3 camera_pose = Iso3::Identity();
  ColorImage color;
  DepthImage depth;
  std::optional<ThermalImage> thermal;
  std::vector<FiducialObservation> fiducials;
};

/// Ray-cast z-depth with optional Gaussian noise (`noise_sigma` metres).
DepthImage render_depth(const world::AtticScene& scene, const Iso3& camera_pose, const CameraIntrinsics& k,
                        std::uint64_t seed, double noise_sigma = 0.0);
/// Albedo with a simple facing-ratio shade.
ColorImage render_color(const world::AtticScene& scene, const Iso3& camera_pose, const CameraIntrinsics& k);
/// Depth and colour from one ray-cast pass (bit-identical to the separate calls).
void render_rgbd(const world::AtticScene& scene, const Iso3& camera_pose, const CameraIntrinsics& k,
                 std::uint64_t seed, double noise_sigma, DepthImage& depth, ColorImage& color);
/// Surface temperature per pixel plus Gaussian noise truncated at 3 sigma. Rays
/// that escape the scene read ambient.
ThermalImage render_thermal(const world::AtticScene& scene, const Iso3& camera_pose, const ThermalCamSpec& spec,
                            double time, std::uint64_t seed);

struct CloudPoint {
  Vec3 position;  ///< world frame
  Rgb color{0, 0, 0};
  int u = 0;
  int v = 0;
};

/// Back-projects valid depth pixels (every `stride`-th row and column) and
/// moves them into the world by camera_pose. `color` may be null.
std::vector<CloudPoint> stereo_pointcloud(const DepthImage& depth, const CameraIntrinsics& k, const Iso3& camera_pose,
                                          const ColorImage* color = nullptr, int stride = 1);

/// Tags inside the frustum, facing the camera and unoccluded, with the
/// relative pose perturbed by position (m) and rotation (rad) noise.
std::vector<FiducialObservation> observe_fiducials(const world::AtticScene& scene, const Iso3& camera_pose,
                                                   const CameraIntrinsics& k, double noise_sigma_pos,
                                                   double noise_sigma_rot, std::uint64_t seed);

}  // namespace paris::sensors
