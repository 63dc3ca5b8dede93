#include <gtest/gtest.h>

#include <cmath>

#include "paris/common/error.hpp"
#include "paris/common/rng.hpp"
#include "paris/world/scene.hpp"
#include "support.hpp"

using namespace paris;
using paris::test::joists_at;
using paris::test::point_leak;
using paris::test::scene_doc;

namespace {

world::AtticScene one_leak_scene(double dt = -10.0, double sigma = 0.02) {
  return world::load_scene(scene_doc(joists_at({0.19, 0.57}), Json::array({point_leak("a", 0.6, 0.38, dt, sigma)})));
}

}  // namespace

TEST(SceneLoad, TestbedSpacingIsValid) {
  const auto s = world::load_scene(scene_doc(joists_at({0.20, 0.555, 0.94, 1.345, 1.72, 2.10, 2.45})));
  EXPECT_EQ(s.joists.size(), 7u);
}

TEST(SceneLoad, RejectsNarrowSpacing) {
  try {
    world::load_scene(scene_doc(joists_at({0.5, 0.75})));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("joist spacing below 0.30 m"), std::string::npos) << e.what();
  }
}

TEST(SceneLoad, EmptyFixturesAndLeaksAreValid) {
  const auto s = world::load_scene(scene_doc(joists_at({0.19, 0.57})));
  EXPECT_TRUE(s.leaks.empty());
  EXPECT_TRUE(s.fixtures.empty());
}

TEST(SceneLoad, UnknownFieldIsParseError) {
  Json doc = scene_doc(joists_at({0.19, 0.57}));
  doc["scene"]["humidity"] = 0.4;
  EXPECT_THROW(world::load_scene(doc), ParseError);
}

TEST(SceneLoad, MissingVersionIsParseError) {
  Json doc = scene_doc(joists_at({0.19, 0.57}));
  doc.erase("version");
  EXPECT_THROW(world::load_scene(doc), ParseError);
}

TEST(SceneLoad, EqualAmbientAndExteriorRejected) {
  Json doc = scene_doc(joists_at({0.19, 0.57}));
  doc["scene"]["exterior_temp_k"] = 290.0;
  EXPECT_THROW(world::load_scene(doc), ValidationError);
}

TEST(SceneLoad, RoundTripsThroughJson) {
  const auto s = one_leak_scene();
  const auto again = world::load_scene(world::scene_to_json(s));
  EXPECT_EQ(world::scene_to_json(again).dump(), world::scene_to_json(s).dump());
}

TEST(SceneLoad, SpacingValidationProperty) {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const double spacing = rng.uniform(0.1, 0.9);
    const Json doc = scene_doc(joists_at({0.3, 0.3 + spacing}));
    const bool expect_ok = spacing >= world::kMinJoistSpacing && spacing <= world::kMaxJoistSpacing;
    bool ok = true;
    try {
      world::load_scene(doc);
    } catch (const ValidationError&) {
      ok = false;
    }
    EXPECT_EQ(ok, expect_ok) << "spacing " << spacing;
  }
}

TEST(Temperature, LeakCentre) {
  const auto s = one_leak_scene();
  EXPECT_NEAR(world::temperature_at(s, Vec3(0.6, 0.38, 0.0), 0.0), 280.0, 1e-12);
}

TEST(Temperature, FiveSigmaTail) {
  const auto s = one_leak_scene(-10.0, 0.02);
  EXPECT_NEAR(world::temperature_at(s, Vec3(0.6 + 0.1, 0.38, 0.0), 0.0), 290.0, 1e-3);
}

TEST(Temperature, OffSurfaceThrows) {
  const auto s = one_leak_scene();
  EXPECT_THROW(world::temperature_at(s, Vec3(0.6, 0.38, 0.05), 0.0), RuntimeError);
}

TEST(Temperature, SealedLeakRelaxesByOneOverE) {
  auto s = one_leak_scene();
  const double ts = 100.0;
  world::apply_seal_coverage_in_place(s, "a", 1.0, ts);
  const double tau = s.leaks[0].relaxation_tau;
  const double expected = 290.0 + -10.0 * std::exp(-1.0);
  EXPECT_NEAR(world::temperature_at(s, Vec3(0.6, 0.38, 0.0), ts + tau), expected, 1e-9);
  // unaffected before the seal
  EXPECT_NEAR(world::temperature_at(s, Vec3(0.6, 0.38, 0.0), ts - 1.0), 280.0, 1e-12);
}

TEST(SealCoverage, FullSealSetsTime) {
  const auto s = world::apply_seal_coverage(one_leak_scene(), "a", 1.0, 12.5);
  EXPECT_DOUBLE_EQ(s.leaks[0].sealed_fraction, 1.0);
  ASSERT_TRUE(s.leaks[0].seal_time.has_value());
  EXPECT_DOUBLE_EQ(*s.leaks[0].seal_time, 12.5);
}

TEST(SealCoverage, MonotoneMax) {
  auto s = world::apply_seal_coverage(one_leak_scene(), "a", 0.3, 1.0);
  s = world::apply_seal_coverage(s, "a", 0.2, 2.0);
  EXPECT_DOUBLE_EQ(s.leaks[0].sealed_fraction, 0.3);
  EXPECT_DOUBLE_EQ(*s.leaks[0].seal_time, 1.0);
}

TEST(SealCoverage, Idempotent) {
  auto s = world::apply_seal_coverage(one_leak_scene(), "a", 0.5, 1.0);
  const auto again = world::apply_seal_coverage(s, "a", 0.5, 2.0);
  EXPECT_DOUBLE_EQ(again.leaks[0].sealed_fraction, 0.5);
  EXPECT_EQ(again.leaks[0].seal_history.size(), s.leaks[0].seal_history.size());
}

TEST(SealCoverage, Errors) {
  const auto s = one_leak_scene();
  EXPECT_THROW(world::apply_seal_coverage(s, "nope", 0.5, 0.0), RuntimeError);
  EXPECT_THROW(world::apply_seal_coverage(s, "a", 1.5, 0.0), RuntimeError);
  EXPECT_THROW(world::apply_seal_coverage(s, "a", -0.1, 0.0), RuntimeError);
}

TEST(SealCoverage, SealedFractionNeverDecreasesProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = one_leak_scene();
    double last = 0.0;
    for (int k = 0; k < 40; ++k) {
      world::apply_seal_coverage_in_place(s, "a", rng.uniform(), k);
      EXPECT_GE(s.leaks[0].sealed_fraction, last);
      last = s.leaks[0].sealed_fraction;
    }
  }
}

TEST(FloorHeight, Lookups) {
  const auto s = world::load_scene(scene_doc(joists_at({0.19, 0.57}, 0.05)));
  const auto on = world::floor_height_at(s, Vec2(0.6, 0.19));
  EXPECT_DOUBLE_EQ(on.height, 0.05);
  EXPECT_EQ(on.kind, world::SurfaceKind::joist);
  const auto mid = world::floor_height_at(s, Vec2(0.6, 0.38));
  EXPECT_DOUBLE_EQ(mid.height, 0.0);
  EXPECT_EQ(mid.kind, world::SurfaceKind::drywall);
  const auto edge = world::floor_height_at(s, Vec2(0.6, 0.19 + 0.019));
  EXPECT_EQ(edge.kind, world::SurfaceKind::joist);
  EXPECT_THROW(world::floor_height_at(s, Vec2(5.0, 0.0)), RuntimeError);
}

TEST(TemperatureProperty, BoundedByLeakSums) {
  const Json leaks = Json::array({point_leak("a", 0.6, 0.38, -10.0, 0.03), point_leak("b", 0.7, 0.40, 6.0, 0.02),
                                  point_leak("c", 0.3, 0.76, -4.0, 0.05)});
  const auto s = world::load_scene(scene_doc(joists_at({0.19, 0.57, 0.95}), leaks));
  const double lo = 290.0 - 14.0, hi = 290.0 + 6.0;
  Rng rng(9);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 p(rng.uniform(0.0, 1.22), rng.uniform(0.25, 0.5), 0.0);
    const double t = world::temperature_field(s, p, rng.uniform(0.0, 3600.0));
    EXPECT_GE(t, lo - 1e-12);
    EXPECT_LE(t, hi + 1e-12);
  }
}

TEST(TemperatureProperty, LipschitzFromGaussianSlope) {
  const Json leaks = Json::array({point_leak("a", 0.6, 0.38, -10.0, 0.03), point_leak("b", 0.7, 0.40, 6.0, 0.02)});
  const auto s = world::load_scene(scene_doc(joists_at({0.19, 0.57}), leaks));
  const double lipschitz = 10.0 / (0.03 * std::sqrt(std::exp(1.0))) + 6.0 / (0.02 * std::sqrt(std::exp(1.0)));
  Rng rng(21);
  for (int i = 0; i < 20000; ++i) {
    const Vec3 p(rng.uniform(0.4, 0.9), rng.uniform(0.25, 0.5), 0.0);
    const Vec3 q = p + Vec3(rng.uniform(-0.005, 0.005), rng.uniform(-0.005, 0.005), 0.0);
    const double dt = std::abs(world::temperature_field(s, p, 0.0) - world::temperature_field(s, q, 0.0));
    EXPECT_LE(dt, lipschitz * (p - q).norm() + 1e-12);
  }
}
