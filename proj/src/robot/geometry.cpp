#include "paris/robot/geometry.hpp"

#include <cmath>
#include <sstream>

#include "paris/common/error.hpp"

namespace paris::robot {
namespace {

Vec3 planar(const Vec3& v) { return {v.x(), 0.0, v.z()}; }

std::vector<BaseCameraMount> default_base_cameras(double body_length) {
  const double pitch = 15.0 * kPi / 180.0;
  const Vec3 fwd(std::cos(pitch), 0.0, -std::sin(pitch));
  const Vec3 back(-std::cos(pitch), 0.0, -std::sin(pitch));
  return {
      {"front", make_iso(Vec3(0.5 * body_length, 0.0, 0.16), look_rotation(fwd, Vec3::UnitZ()))},
      {"rear", make_iso(Vec3(-0.5 * body_length, 0.0, 0.16), look_rotation(back, Vec3::UnitZ()))},
  };
}

std::string fmt_kg(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << v << " kg";
  return os.str();
}

}  // namespace

double ArmGeometry::reach() const {
  return planar(joints[2].offset).norm() + planar(joints[3].offset).norm() +
         (planar(joints[4].offset) + planar(gun_tip_offset)).norm();
}

bool ArmGeometry::within_limits(const ArmJoints& q, double tol) const {
  for (int i = 0; i < kArmDof; ++i) {
    const auto& j = joints[static_cast<std::size_t>(i)];
    if (q[static_cast<std::size_t>(i)] < j.lower - tol || q[static_cast<std::size_t>(i)] > j.upper + tol) return false;
  }
  return true;
}

ArmGeometry default_arm() {
  ArmGeometry a;
  a.joints = {{
      {"waist", Vec3(0.0, 0.0, 0.0), Vec3::UnitZ(), -kPi, kPi},
      {"shoulder", Vec3(0.0, 0.0, 0.12), Vec3::UnitY(), -1.85, 1.95},
      {"elbow", Vec3(0.30, 0.0, 0.0), Vec3::UnitY(), -2.10, 2.10},
      {"wrist_angle", Vec3(0.26, 0.0, 0.0), Vec3::UnitY(), -1.80, 2.20},
      {"wrist_rotate", Vec3(0.07, 0.0, 0.0), Vec3::UnitX(), -kPi, kPi},
  }};
  a.gun_tip_offset = Vec3(0.12, 0.0, 0.0);
  a.mount = make_iso(Vec3(0.0, 0.0, 0.15));
  // Module above the gun, optical axis along the tool axis.
  a.stereo_mount = make_iso(Vec3(0.0, 0.0, 0.06), look_rotation(Vec3::UnitX(), Vec3::UnitZ()));
  a.stereo_T_thermal = make_iso(Vec3(0.03, 0.0, 0.0));
  return a;
}

RobotGeometry paris1() {
  RobotGeometry g;
  g.preset = "paris1";
  g.width = 0.701;
  g.folded_height = 0.48;
  g.body_length = 0.50;
  g.flipper_length = (0.98 - 0.50) / 2.0;
  g.mass = 30.0;
  g.arm = default_arm();
  g.base_cameras = default_base_cameras(g.body_length);
  return g;
}

RobotGeometry paris2() {
  RobotGeometry g = paris1();
  g.preset = "paris2";
  g.width = 0.559;
  g.flipper_length = (1.125 - 0.50) / 2.0;
  g.track_gauge = 0.42;
  g.mass = 21.8;
  return g;
}

void validate_geometry(const RobotGeometry& g) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(std::string("robot ") + name + " must be positive");
  };
  positive(g.width, "width");
  positive(g.folded_height, "folded_height");
  positive(g.body_length, "body_length");
  positive(g.flipper_length, "flipper_length");
  positive(g.track_gauge, "track_gauge");
  positive(g.payload_capacity, "payload_capacity");
  positive(g.mass, "mass");
  positive(g.climb_limit, "climb_limit");
  positive(g.max_linear_velocity, "max_linear_velocity");
  positive(g.max_angular_velocity, "max_angular_velocity");
  positive(g.max_flipper_rate, "max_flipper_rate");
  if (!(g.unfolded_span() > g.body_length)) throw ValidationError("robot unfolded_span must exceed body_length");
  if (!(g.flipper_min < g.flipper_max)) throw ValidationError("robot flipper limits are inverted");
  const auto& a = g.arm;
  if (std::abs(a.gun_tip_offset.y()) > 1e-12 || std::abs(a.gun_tip_offset.z()) > 1e-12) {
    throw ValidationError("gun_tip_offset must lie on the tool axis");
  }
  for (const auto& j : a.joints) {
    if (!(j.lower < j.upper)) throw ValidationError("arm joint '" + j.name + "' limits are inverted");
  }
}

RobotGeometry load_robot_geometry(const Json* section) {
  if (!section) return paris1();
  ObjectReader r(*section, "$.robot");
  const std::string preset = r.string("preset", "paris1");
  RobotGeometry g;
  if (preset == "paris1") g = paris1();
  else if (preset == "paris2") g = paris2();
  else throw ParseError("$.robot.preset: unknown preset '" + preset + "'");
  if (r.has("overrides")) {
    ObjectReader o = r.object("overrides");
    g.width = o.number("width", g.width);
    g.folded_height = o.number("folded_height", g.folded_height);
    g.body_length = o.number("body_length", g.body_length);
    if (o.has("unfolded_span")) g.flipper_length = 0.5 * (o.number("unfolded_span") - g.body_length);
    g.track_gauge = o.number("track_gauge", g.track_gauge);
    g.mass = o.number("mass", g.mass);
    g.payload_capacity = o.number("payload_capacity", g.payload_capacity);
    g.climb_limit = o.number("climb_limit", g.climb_limit);
    g.flat_climb_limit = o.number("flat_climb_limit", g.flat_climb_limit);
    g.flipper_min = o.number("flipper_min", g.flipper_min);
    g.flipper_max = o.number("flipper_max", g.flipper_max);
    g.max_linear_velocity = o.number("max_linear_velocity", g.max_linear_velocity);
    g.max_angular_velocity = o.number("max_angular_velocity", g.max_angular_velocity);
    g.max_flipper_rate = o.number("max_flipper_rate", g.max_flipper_rate);
    if (o.has("gun_tip_offset")) g.arm.gun_tip_offset = o.vec3("gun_tip_offset");
    if (o.has("arm_link_lengths")) {
      const auto l = o.numbers("arm_link_lengths");
      if (l.size() != 4) throw ParseError("$.robot.overrides.arm_link_lengths: expected 4 numbers");
      g.arm.joints[1].offset = Vec3(0.0, 0.0, l[0]);
      g.arm.joints[2].offset = Vec3(l[1], 0.0, 0.0);
      g.arm.joints[3].offset = Vec3(l[2], 0.0, 0.0);
      g.arm.joints[4].offset = Vec3(l[3], 0.0, 0.0);
    }
    o.finish();
    g.base_cameras = default_base_cameras(g.body_length);
  }
  r.finish();
  validate_geometry(g);
  return g;
}

std::vector<HatchOrientation> hatch_fit(const RobotGeometry& g, bool folded, const world::Hatch& hatch) {
  std::vector<HatchOrientation> out;
  if (!folded) return out;
  const double c = 2.0 * kHatchClearance;
  auto fits = [&](double a, double b, double w, double h) { return a + c <= w + 1e-12 && b + c <= h + 1e-12; };
  if (fits(g.width, g.folded_height, hatch.width, hatch.height)) out.push_back(HatchOrientation::width_along_hatch_width);
  if (fits(g.folded_height, g.width, hatch.width, hatch.height)) out.push_back(HatchOrientation::width_along_hatch_height);
  return out;
}

double attach_payload(const RobotGeometry& g, double mass) {
  if (mass < 0.0) throw RuntimeError("payload mass must be non-negative");
  const double margin = g.payload_capacity - mass;
  if (margin < 0.0) {
    throw RuntimeError("payload " + fmt_kg(mass) + " exceeds capacity " + fmt_kg(g.payload_capacity) + " by " +
                       fmt_kg(-margin));
  }
  return margin;
}

}  // namespace paris::robot
