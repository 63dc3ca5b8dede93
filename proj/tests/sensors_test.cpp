#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "paris/common/rng.hpp"
#include "paris/sensors/camera.hpp"
#include "paris/sensors/image_io.hpp"
#include "paris/world/scene.hpp"
#include "paris/world/surfaces.hpp"
#include "support.hpp"

using namespace paris;
using namespace paris::sensors;
using paris::test::joists_at;
using paris::test::point_leak;
using paris::test::scene_doc;
using paris::test::testbed_rows;

namespace {

/// Open 5 x 3 m room with no joists, walls up to 2 m.
world::AtticScene room(const Json& leaks = Json::array()) {
  Json doc = scene_doc(Json::array(), leaks);
  doc["scene"]["footprint"] = {5.0, 3.0};
  return world::load_scene(doc);
}

CameraIntrinsics small_k(int w = 64, int h = 48, double f = 40.0) {
  CameraIntrinsics k;
  k.fx = k.fy = f;
  k.cx = (w - 1) / 2.0;
  k.cy = (h - 1) / 2.0;
  k.width = w;
  k.height = h;
  k.min_range = 0.0;
  k.max_range = 10.0;
  return k;
}

Iso3 looking(const Vec3& from, const Vec3& forward, const Vec3& up = Vec3::UnitZ()) {
  return make_iso(from, look_rotation(forward, up));
}

// Brute-force ray parameter against the drywall, the four walls and each
// joist box, for scenes without fixtures or ceiling.
double oracle_t(const world::AtticScene& s, const Vec3& o, const Vec3& d) {
  const double inf = std::numeric_limits<double>::infinity();
  const double W = s.footprint.x(), L = s.footprint.y(), top = s.volume_top();
  double best = inf;
  auto plane = [&](int axis, double value, auto inside) {
    if (d[axis] == 0.0) return;
    const double t = (value - o[axis]) / d[axis];
    if (t <= 1e-9 || t >= best) return;
    if (inside(o + t * d)) best = t;
  };
  plane(2, 0.0, [&](const Vec3& p) { return p.x() >= 0 && p.x() <= W && p.y() >= 0 && p.y() <= L; });
  auto wall_ok = [&](const Vec3& p) { return p.z() >= 0 && p.z() <= top; };
  plane(0, 0.0, [&](const Vec3& p) { return wall_ok(p) && p.y() >= 0 && p.y() <= L; });
  plane(0, W, [&](const Vec3& p) { return wall_ok(p) && p.y() >= 0 && p.y() <= L; });
  plane(1, 0.0, [&](const Vec3& p) { return wall_ok(p) && p.x() >= 0 && p.x() <= W; });
  plane(1, L, [&](const Vec3& p) { return wall_ok(p) && p.x() >= 0 && p.x() <= W; });
  for (const auto& j : s.joists) {
    const Vec3 lo(j.origin.x(), j.origin.y() - j.width / 2, 0.0);
    const Vec3 hi(j.origin.x() + j.length, j.origin.y() + j.width / 2, j.top_height);
    double t0 = -inf, t1 = inf;
    bool miss = false;
    for (int a = 0; a < 3; ++a) {
      if (d[a] == 0.0) {
        if (o[a] < lo[a] || o[a] > hi[a]) miss = true;
        continue;
      }
      double ta = (lo[a] - o[a]) / d[a], tb = (hi[a] - o[a]) / d[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
    if (!miss && t0 <= t1 && t0 > 1e-9 && t0 < best) best = t0;
  }
  return best;
}

double stddev(const std::vector<double>& xs) {
  double m = 0;
  for (double x : xs) m += x;
  m /= xs.size();
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  return std::sqrt(v / (xs.size() - 1));
}

}  // namespace

TEST(Intrinsics, Validation) {
  auto k = small_k();
  EXPECT_NO_THROW(k.validate());
  k.fx = 0.0;
  EXPECT_THROW(k.validate(), ValidationError);
  k = small_k();
  k.cx = k.width;
  EXPECT_THROW(k.validate(), ValidationError);
  const auto rgbd = rgbd_intrinsics();
  EXPECT_EQ(rgbd.width, 640);
  EXPECT_EQ(rgbd.height, 480);
  EXPECT_NEAR(2.0 * std::atan(rgbd.cx / rgbd.fx), 87.0 * kPi / 180.0, 0.01);
  EXPECT_EQ(thermal_spec().intrinsics.width, 160);
  EXPECT_EQ(thermal_spec().intrinsics.height, 120);
}

TEST(RenderDepth, WallAtTwoMetres) {
  const auto s = room();
  auto k = small_k(640, 480, 200.0);
  k.cx = 320;
  k.cy = 240;
  const Iso3 cam = looking(Vec3(1.0, 1.0, 1.0), Vec3::UnitY());
  const auto d = render_depth(s, cam, k, 0);
  EXPECT_NEAR(d.at(320, 240), 2.0, 1e-9);
  // 45 degree ray: z-depth, not range
  EXPECT_NEAR(d.at(520, 240), 2.0, 1e-9);
}

TEST(RenderDepth, MatchesBruteForceOracle) {
  const auto s = world::load_scene(scene_doc(joists_at(testbed_rows())));
  const auto k = small_k();
  Rng rng(44);
  int compared = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 from(rng.uniform(0.1, 1.1), rng.uniform(0.1, 2.4), rng.uniform(0.16, 1.5));
    const Vec3 fwd(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 0.2));
    const Vec3 up = std::abs(fwd.normalized().z()) > 0.9 ? Vec3::UnitY() : Vec3::UnitZ();
    const Iso3 cam = looking(from, fwd, up);
    const auto d = render_depth(s, cam, k, 0);
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        const Vec3 dc((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        const double t = oracle_t(s, from, cam.linear() * dc);
        const double expect = t <= k.max_range ? t : 0.0;
        ASSERT_NEAR(d.at(u, v), expect, 1e-6) << "trial " << trial << " pixel " << u << "," << v;
        ++compared;
      }
    }
  }
  EXPECT_EQ(compared, 30 * 64 * 48);
}

TEST(RenderDepth, DeterministicWithNoise) {
  const auto s = world::load_scene(scene_doc(joists_at(testbed_rows())));
  const Iso3 cam = looking(Vec3(0.6, 0.3, 0.5), Vec3(0, 1, -0.5));
  const auto a = render_depth(s, cam, small_k(), 9, 0.01);
  const auto b = render_depth(s, cam, small_k(), 9, 0.01);
  EXPECT_EQ(a.data, b.data);
  const auto c = render_depth(s, cam, small_k(), 10, 0.01);
  EXPECT_NE(a.data, c.data);
}

TEST(RenderDepth, BackProjectedPixelsLieOnSurfacesProperty) {
  const auto s = world::load_scene(scene_doc(joists_at(testbed_rows())));
  const auto k = small_k();
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 from(rng.uniform(0.1, 1.1), rng.uniform(0.1, 2.4), rng.uniform(0.2, 1.0));
    const Iso3 cam = looking(from, Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), -0.6));
    const auto d = render_depth(s, cam, k, 0);
    for (const auto& p : stereo_pointcloud(d, k, cam)) {
      ASSERT_LT(world::distance_to_surfaces(s, p.position), 1e-6);
      // re-render along the same ray from a point halfway there
      const Vec3 mid = 0.5 * (from + p.position);
      const auto hit = world::raycast(s, mid, p.position - mid, 2.0);
      ASSERT_TRUE(hit.has_value());
      EXPECT_LT((hit->point - p.position).norm(), 1e-6);
    }
  }
}

TEST(RenderThermal, UniformSceneIsAmbient) {
  const auto s = world::load_scene(scene_doc(joists_at(testbed_rows())));
  auto spec = thermal_spec();
  spec.noise_sigma = 0.0;
  const auto img = render_thermal(s, looking(Vec3(0.6, 1.0, 0.6), Vec3(0, 0.3, -1)), spec, 0.0, 1);
  for (const double t : img.data) EXPECT_DOUBLE_EQ(t, 290.0);
}

TEST(RenderThermal, LeakMinimumAtProjectedPixel) {
  Rng rng(5);
  auto spec = thermal_spec();
  spec.noise_sigma = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 leak(rng.uniform(1.0, 4.0), rng.uniform(0.8, 2.2), 0.0);
    const auto s = room(Json::array({point_leak("l", leak.x(), leak.y(), -10.0, 0.05)}));
    const Vec3 from = leak + Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(0.4, 0.8));
    const Iso3 cam = looking(from, leak - from, Vec3::UnitY());
    const auto img = render_thermal(s, cam, spec, 0.0, 0);
    int bu = 0, bv = 0;
    for (int v = 0; v < img.height; ++v)
      for (int u = 0; u < img.width; ++u)
        if (img.at(u, v) < img.at(bu, bv)) bu = u, bv = v;
    const Vec3 pc = cam.inverse() * leak;
    const auto& k = spec.intrinsics;
    const double pu = k.cx + k.fx * pc.x() / pc.z(), pv = k.cy + k.fy * pc.y() / pc.z();
    EXPECT_LE(std::abs(bu - pu), 1.0) << trial;
    EXPECT_LE(std::abs(bv - pv), 1.0) << trial;
  }
}

TEST(RenderThermal, NoiseStatistics) {
  auto spec = thermal_spec();
  spec.intrinsics = small_k(100, 100, 60.0);
  spec.noise_sigma = 0.1;
  const auto s = room();
  const auto img = render_thermal(s, looking(Vec3(2.5, 1.5, 0.5), -Vec3::UnitZ(), Vec3::UnitY()), spec, 0.0, 3);
  EXPECT_NEAR(stddev(img.data), 0.1, 0.01);
}

TEST(RenderThermal, WithinSceneBoundsProperty) {
  const Json leaks = Json::array({point_leak("a", 0.6, 0.38, -10.0, 0.03), point_leak("b", 0.5, 0.76, 5.0, 0.03)});
  const auto s = world::load_scene(scene_doc(joists_at(testbed_rows()), leaks));
  const auto spec = thermal_spec();
  const double lo = 280.0 - 3 * spec.noise_sigma, hi = 295.0 + 3 * spec.noise_sigma;
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Iso3 cam = looking(Vec3(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), 0.5), Vec3(0, 0.2, -1));
    for (const double t : render_thermal(s, cam, spec, 0.0, trial).data) {
      ASSERT_GE(t, lo);
      ASSERT_LE(t, hi);
    }
  }
}

TEST(RenderThermal, SealedSceneRelaxesToAmbient) {
  const auto sealed = world::apply_seal_coverage(
      room(Json::array({point_leak("l", 2.0, 1.5, -10.0, 0.05)})), "l", 1.0, 30.0);
  const auto ambient = room();
  const auto spec = thermal_spec();
  const Iso3 cam = looking(Vec3(2.0, 1.4, 0.5), -Vec3::UnitZ(), Vec3::UnitY());
  const double t = 30.0 + 10.0 * sealed.leaks[0].relaxation_tau;
  const auto a = render_thermal(sealed, cam, spec, t, 4);
  const auto b = render_thermal(ambient, cam, spec, t, 4);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 3 * spec.noise_sigma);
  // and the leak is still visible right after sealing
  const auto fresh = render_thermal(sealed, cam, spec, 30.0, 4);
  double mn = 1e9;
  for (const double x : fresh.data) mn = std::min(mn, x);
  EXPECT_LT(mn, 285.0);
}

TEST(StereoPointcloud, PrincipalAndFocalPixels) {
  auto k = small_k(200, 100, 50.0);
  k.cx = 100;
  k.cy = 50;
  DepthImage d(k.width, k.height, 0.0);
  d.at(100, 50) = 1.5;
  d.at(150, 50) = 1.5;
  const auto pts = stereo_pointcloud(d, k, Iso3::Identity());
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_TRUE(pts[0].position.isApprox(Vec3(0, 0, 1.5)));
  EXPECT_TRUE(pts[1].position.isApprox(Vec3(1.5, 0, 1.5)));
}

TEST(StereoPointcloud, ProjectionRoundTripProperty) {
  const auto k = small_k(160, 120, 100.0);
  Rng rng(19);
  for (int i = 0; i < 5000; ++i) {
    const Iso3 cam = make_iso(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)),
                              rpy_to_matrix(rng.uniform(-kPi, kPi), rng.uniform(-1, 1), rng.uniform(-kPi, kPi)));
    const Vec3 pc(rng.uniform(-0.7, 0.7), rng.uniform(-0.5, 0.5), rng.uniform(0.5, 3.0));
    const Vec3 pc_in(pc.x() * pc.z(), pc.y() * pc.z(), pc.z());
    const Vec3 world = cam * pc_in;
    const auto px = k.project(cam.inverse() * world);
    ASSERT_TRUE(px.has_value());
    if (!k.in_image(*px)) continue;
    const int u = static_cast<int>(std::lround(px->x())), v = static_cast<int>(std::lround(px->y()));
    DepthImage d(k.width, k.height, 0.0);
    d.at(u, v) = pc_in.z();
    const auto pts = stereo_pointcloud(d, k, cam);
    ASSERT_EQ(pts.size(), 1u);
    // half a pixel of quantisation in each axis at depth z
    const double bound = std::hypot(0.5 / k.fx, 0.5 / k.fy) * pc_in.z() + 1e-9;
    EXPECT_LE((pts[0].position - world).norm(), bound);
  }
}

TEST(StereoPointcloud, SkipsInvalidAndChecksSize) {
  const auto k = small_k();
  DepthImage d(k.width, k.height, 0.0);
  EXPECT_TRUE(stereo_pointcloud(d, k, Iso3::Identity()).empty());
  DepthImage wrong(3, 3, 1.0);
  EXPECT_THROW(stereo_pointcloud(wrong, k, Iso3::Identity()), RuntimeError);
}

namespace {

world::AtticScene tag_room() {
  Json doc = scene_doc(Json::array());
  doc["scene"]["footprint"] = {5.0, 3.0};
  doc["tags"] = Json::array({{{"id", 1}, {"position", {1.0, 2.0, 1.0}}, {"rpy", {kPi / 2, 0.0, 0.0}}, {"size", 0.1}}});
  return world::load_scene(doc);
}

}  // namespace

TEST(Fiducials, TagOneMetreAhead) {
  const auto s = tag_room();
  const auto obs = observe_fiducials(s, looking(Vec3(1.0, 1.0, 1.0), Vec3::UnitY()), small_k(), 0, 0, 1);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].tag_id, 1);
  EXPECT_FALSE(obs[0].noise_applied);
  EXPECT_TRUE(obs[0].relative_pose.translation().isApprox(Vec3(0, 0, 1), 1e-12));
}

TEST(Fiducials, BehindCameraExcluded) {
  const auto s = tag_room();
  EXPECT_TRUE(observe_fiducials(s, looking(Vec3(1.0, 1.0, 1.0), -Vec3::UnitY()), small_k(), 0, 0, 1).empty());
  // seen from behind the tag face
  EXPECT_TRUE(observe_fiducials(s, looking(Vec3(1.0, 2.5, 1.0), -Vec3::UnitY()), small_k(), 0, 0, 1).empty());
}

TEST(Fiducials, NoiseIsUnbiased) {
  const auto s = tag_room();
  const double sigma = 0.01;
  const int n = 1000;
  Vec3 mean = Vec3::Zero();
  for (int seed = 0; seed < n; ++seed) {
    const auto obs = observe_fiducials(s, looking(Vec3(1.0, 1.0, 1.0), Vec3::UnitY()), small_k(), sigma, 0.01, seed);
    ASSERT_EQ(obs.size(), 1u);
    EXPECT_TRUE(obs[0].noise_applied);
    mean += obs[0].relative_pose.translation();
  }
  mean /= n;
  const double bound = 3 * sigma / std::sqrt(n);
  EXPECT_LT(std::abs(mean.x()), bound);
  EXPECT_LT(std::abs(mean.y()), bound);
  EXPECT_LT(std::abs(mean.z() - 1.0), bound);
}

TEST(ImageIo, PngRoundTrips) {
  ColorImage c(7, 5);
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 7; ++u) c.at(u, v) = {static_cast<std::uint8_t>(u * 30), static_cast<std::uint8_t>(v * 50), 9};
  const auto dc = decode_png(encode_png_rgb(c));
  EXPECT_EQ(dc.width, 7);
  EXPECT_EQ(dc.channels, 3);
  EXPECT_EQ(dc.bit_depth, 8);
  EXPECT_EQ(dc.samples[(2 * 7 + 3) * 3 + 0], 90);
  EXPECT_EQ(dc.samples[(2 * 7 + 3) * 3 + 1], 100);

  DepthImage d(3, 2, 0.0);
  d.at(1, 0) = 1.2346;
  d.at(2, 1) = 99.0;
  const auto mm = depth_to_mm(d);
  EXPECT_EQ(mm.at(0, 0), 0);
  EXPECT_EQ(mm.at(1, 0), 1235);
  EXPECT_EQ(mm.at(2, 1), 65535);
  const auto dg = decode_png(encode_png_gray16(mm));
  EXPECT_EQ(dg.bit_depth, 16);
  EXPECT_EQ(dg.channels, 1);
  EXPECT_EQ(dg.samples[1], 1235);

  ThermalImage t(1, 1, 290.126);
  EXPECT_EQ(thermal_to_ck(t).at(0, 0), 29013);
}

TEST(ImageIo, AsciiPly) {
  std::ostringstream os;
  write_ply(os, {{Vec3(1, 2, 3), {4, 5, 6}, 290.5}, {Vec3(-1, 0, 0.5), {0, 0, 0}, 280.0}});
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("ply\nformat ascii 1.0\n", 0), 0u);
  EXPECT_NE(s.find("element vertex 2"), std::string::npos);
  EXPECT_NE(s.find("property float temperature"), std::string::npos);
  EXPECT_NE(s.find("end_header"), std::string::npos);
}
