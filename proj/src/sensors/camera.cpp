#include "paris/sensors/camera.hpp"

#include <cmath>

#include "paris/common/error.hpp"
#include "paris/common/rng.hpp"
#include "paris/world/surfaces.hpp"

namespace paris::sensors {

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double hfov_rad, double vfov_rad,
                                            double min_range, double max_range) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.cx = 0.5 * (width - 1);
  k.cy = 0.5 * (height - 1);
  k.fx = 0.5 * width / std::tan(0.5 * hfov_rad);
  k.fy = 0.5 * height / std::tan(0.5 * vfov_rad);
  k.min_range = min_range;
  k.max_range = max_range;
  return k;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ValidationError("image size must be positive");
  if (!(cx >= 0.0 && cx < width)) throw ValidationError("cx outside the image");
  if (!(cy >= 0.0 && cy < height)) throw ValidationError("cy outside the image");
  if (!(min_range >= 0.0) || !(max_range > min_range)) throw ValidationError("invalid depth range");
}

std::optional<Vec2> CameraIntrinsics::project(const Vec3& p) const {
  if (!(p.z() > 0.0)) return std::nullopt;
  return Vec2(cx + fx * p.x() / p.z(), cy + fy * p.y() / p.z());
}

Vec3 CameraIntrinsics::back_project(double u, double v, double depth) const {
  return {(u - cx) * depth / fx, (v - cy) * depth / fy, depth};
}

bool CameraIntrinsics::in_image(const Vec2& px) const {
  return px.x() >= -0.5 && px.x() < width - 0.5 && px.y() >= -0.5 && px.y() < height - 0.5;
}

CameraIntrinsics rgbd_intrinsics() {
  return CameraIntrinsics::from_fov(640, 480, 87.0 * kPi / 180.0, 58.0 * kPi / 180.0, 0.3, 3.0);
}

CameraIntrinsics stereo_intrinsics() {
  return CameraIntrinsics::from_fov(160, 120, 57.0 * kPi / 180.0, 2.0 * std::atan(0.75 * std::tan(28.5 * kPi / 180.0)),
                                    0.05, 2.0);
}

ThermalCamSpec thermal_spec() {
  ThermalCamSpec s;
  s.intrinsics = CameraIntrinsics::from_fov(160, 120, 57.0 * kPi / 180.0,
                                            2.0 * std::atan(0.75 * std::tan(28.5 * kPi / 180.0)), 0.0, 20.0);
  s.noise_sigma = 0.1;
  return s;
}

namespace {

std::uint8_t shade(std::uint8_t c, double f) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c * f, 0.0, 255.0)));
}

}  // namespace

void render_rgbd(const world::AtticScene& scene, const Iso3& camera_pose, const CameraIntrinsics& k,
                 std::uint64_t seed, double noise_sigma, DepthImage& depth, ColorImage& color) {
  k.validate();
  depth = DepthImage(k.width, k.height, 0.0);
  color = ColorImage(k.width, k.height, Rgb{0, 0, 0});
  Rng rng(seed);
  const Mat3 r = camera_pose.linear();
  const Vec3 o = camera_pose.translation();
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      // Unnormalised ray with unit z in the camera frame: t is the z-depth.
      const Vec3 dc((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const auto hit = world::raycast(scene, o, r * dc, k.max_range);
      if (!hit || hit->t < k.min_range) continue;
      double z = hit->t;
      if (noise_sigma > 0.0) z = std::clamp(rng.normal(z, noise_sigma), 1e-6, k.max_range);
      depth.at(u, v) = z;
      const Rgb base = world::surface_color(scene, *hit);
      const double facing = std::abs(hit->normal.dot((r * dc).normalized()));
      const double f = 0.55 + 0.45 * facing;
      color.at(u, v) = {shade(base[0], f), shade(base[1], f), shade(base[2], f)};
    }
  }
}

DepthImage render_depth(const world::AtticScene& scene, const Iso3& camera_pose, const CameraIntrinsics& k,
                        std::uint64_t seed, double noise_sigma) {
  DepthImage d;
  ColorImage c;
  render_rgbd(scene, camera_pose, k, seed, noise_sigma, d, c);
  return d;
}

ColorImage render_color(const world::AtticScene& scene, const Iso3& camera_pose, const CameraIntrinsics& k) {
  DepthImage d;
  ColorImage c;
  render_rgbd(scene, camera_pose, k, 0, 0.0, d, c);
  return c;
}

ThermalImage render_thermal(const world::AtticScene& scene, const Iso3& camera_pose, const ThermalCamSpec& spec,
                            double time, std::uint64_t seed) {
  const auto& k = spec.intrinsics;
  k.validate();
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("thermal noise_sigma must be non-negative");
  ThermalImage img(k.width, k.height, scene.ambient_attic_temp);
  Rng rng(seed);
  const Mat3 r = camera_pose.linear();
  const Vec3 o = camera_pose.translation();
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Vec3 dc((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const auto hit = world::raycast(scene, o, r * dc, k.max_range);
      const double t = hit ? world::temperature_field(scene, hit->point, time) : scene.ambient_attic_temp;
      const double n = std::clamp(rng.normal(0.0, spec.noise_sigma), -3.0 * spec.noise_sigma, 3.0 * spec.noise_sigma);
      img.at(u, v) = t + n;
    }
  }
  return img;
}

std::vector<CloudPoint> stereo_pointcloud(const DepthImage& depth, const CameraIntrinsics& k, const Iso3& camera_pose,
                                          const ColorImage* color, int stride) {
  if (depth.width != k.width || depth.height != k.height)
    throw RuntimeError("depth image does not match the intrinsics");
  if (stride < 1) throw RuntimeError("stride must be positive");
  std::vector<CloudPoint> out;
  for (int v = 0; v < k.height; v += stride) {
    for (int u = 0; u < k.width; u += stride) {
      const double z = depth.at(u, v);
      if (!(z > 0.0) || !std::isfinite(z)) continue;
      CloudPoint p;
      p.position = camera_pose * k.back_project(u, v, z);
      if (color) p.color = color->at(u, v);
      p.u = u;
      p.v = v;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<FiducialObservation> observe_fiducials(const world::AtticScene& scene, const Iso3& camera_pose,
                                                   const CameraIntrinsics& k, double noise_sigma_pos,
                                                   double noise_sigma_rot, std::uint64_t seed) {
  std::vector<FiducialObservation> out;
  Rng rng(seed);
  const Iso3 inv = camera_pose.inverse();
  for (const auto& tag : scene.tags) {
    const Iso3 rel = inv * tag.pose;
    const Vec3 pc = rel.translation();
    const auto px = k.project(pc);
    if (!px || !k.in_image(*px) || pc.z() > k.max_range || pc.z() < k.min_range) continue;
    const Vec3 to_cam = camera_pose.translation() - tag.pose.translation();
    if (to_cam.dot(tag.pose.linear().col(2)) <= 0.0) continue;
    const Vec3 dir = -to_cam;
    const double dist = dir.norm();
    if (world::raycast(scene, camera_pose.translation(), dir, 1.0 - 1e-3 / dist)) continue;
    FiducialObservation ob;
    ob.tag_id = tag.id;
    ob.relative_pose = rel;
    if (noise_sigma_pos > 0.0 || noise_sigma_rot > 0.0) {
      const Vec3 dp(rng.normal(0.0, noise_sigma_pos), rng.normal(0.0, noise_sigma_pos),
                    rng.normal(0.0, noise_sigma_pos));
      const Vec3 dr(rng.normal(0.0, noise_sigma_rot), rng.normal(0.0, noise_sigma_rot),
                    rng.normal(0.0, noise_sigma_rot));
      ob.relative_pose.translation() += dp;
      if (dr.norm() > 0.0) ob.relative_pose.linear() = Eigen::AngleAxisd(dr.norm(), dr.normalized()) * rel.linear();
      ob.noise_applied = true;
    }
    out.push_back(ob);
  }
  return out;
}

}  // namespace paris::sensors
