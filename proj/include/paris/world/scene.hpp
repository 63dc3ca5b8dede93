#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "paris/common/geometry.hpp"
#include "paris/common/json_reader.hpp"

namespace paris::world {

inline constexpr double kMinJoistSpacing = 0.30;
inline constexpr double kMaxJoistSpacing = 0.60;
/// Points farther than this from every surface are "off-surface".
inline constexpr double kSurfaceTolerance = 1e-3;

/// A floor joist: a box of `width` centred on the segment from `origin`
/// along `direction`, rising `top_height` above the drywall.
struct Joist {
  Vec2 origin = Vec2::Zero();
  Vec2 direction = Vec2::UnitX();
  double length = 1.0;
  double width = 0.038;
  double top_height = 0.14;

  Vec2 normal() const { return {-direction.y(), direction.x()}; }
  /// Closed containment of the joist's floor-plan rectangle.
  bool contains(const Vec2& xy) const;
};

enum class FixtureKind { light_fixture, fan_duct, junction_box, conduit, chimney };

struct CircleShape {
  double radius;
};
struct RectangleShape {
  double w;
  double h;
};
/// Open cylinder from the fixture position along `axis` (length = |axis|).
struct CylinderShape {
  double radius;
  Vec3 axis;
};
using FixtureShape = std::variant<CircleShape, RectangleShape, CylinderShape>;

struct Fixture {
  std::string id;
  FixtureKind kind = FixtureKind::light_fixture;
  Iso3 pose = Iso3::Identity();
  FixtureShape shape = CircleShape{0.05};
};

struct AnnulusGeometry {
  Vec3 center;
  double radius;
  double width;
  Vec3 normal = Vec3::UnitZ();
};
struct SegmentGeometry {
  Vec3 p0;
  Vec3 p1;
  double width;
};
/// `sigma` of zero means "use the leak's falloff".
struct PointGeometry {
  Vec3 center;
  double sigma = 0.0;
};
using LeakGeometry = std::variant<AnnulusGeometry, SegmentGeometry, PointGeometry>;

/// Distance from p to the leak's core set (zero inside the annulus band or bead).
double distance_to(const LeakGeometry& g, const Vec3& p);
/// Representative point: annulus/point centre or segment midpoint.
Vec3 reference_point(const LeakGeometry& g);
/// Evenly spaced points along the leak core centreline (the annulus ring, the
/// segment, or the single point); at least one point.
std::vector<Vec3> centerline_samples(const LeakGeometry& g, double spacing);
double centerline_length(const LeakGeometry& g);

struct SealEvent {
  double time;
  double fraction_increment;
};

struct LeakSource {
  std::string id;
  LeakGeometry geometry = PointGeometry{Vec3::Zero()};
  double delta_t = -10.0;
  double sigma = 0.03;
  double sealed_fraction = 0.0;
  std::optional<double> seal_time;
  double relaxation_tau = 600.0;
  /// Each increase of sealed_fraction, in application order.
  std::vector<SealEvent> seal_history;

  double falloff() const;
  /// Multiplier on delta_t at time t: 1 before any seal; each sealed
  /// increment relaxes away with time constant relaxation_tau.
  double strength_at(double t) const;
};

struct Hatch {
  double width = 0.57;
  double height = 0.76;
  Vec2 position = Vec2::Zero();
};

struct FiducialTag {
  int id = 0;
  Iso3 pose = Iso3::Identity();  ///< tag z-axis faces away from its mounting surface
  double size = 0.1;
};

struct AtticScene {
  Vec2 footprint{1.22, 2.51};
  double ambient_attic_temp = 290.0;
  double exterior_temp = 273.0;
  double drywall_level = 0.0;
  std::optional<double> ceiling_height;
  bool walls = true;
  std::vector<Joist> joists;
  std::vector<Fixture> fixtures;
  std::vector<LeakSource> leaks;
  Hatch hatch;
  std::vector<FiducialTag> tags;

  const LeakSource* find_leak(const std::string& id) const;
  LeakSource* find_leak(const std::string& id);
  const FiducialTag* find_tag(int id) const;
  bool in_footprint(const Vec2& xy) const;
  /// Top of the wall/ceiling volume used for rendering when no ceiling is set.
  double volume_top() const { return ceiling_height.value_or(drywall_level + 2.0); }
};

/// Parses and validates a scene document (version 1). The optional `robot`
/// key is accepted but left to the robot model.
AtticScene load_scene(const Json& doc);
AtticScene load_scene_file(const std::string& path);
/// Serialises a scene back into the document schema (round-trips load_scene).
Json scene_to_json(const AtticScene& scene);

/// Checks every scene invariant; throws ValidationError naming the first violation.
void validate_scene(const AtticScene& scene);

/// Surface temperature at a point on a scene surface. Throws RuntimeError when
/// p is more than kSurfaceTolerance from every surface.
double temperature_at(const AtticScene& scene, const Vec3& p, double time);
/// Same field without the on-surface check (callers already hold a surface point).
double temperature_field(const AtticScene& scene, const Vec3& p, double time);

/// Lower/upper bound of the field over all points and times.
std::pair<double, double> temperature_bounds(const AtticScene& scene);

/// Raises a leak's sealed fraction to max(old, covered_fraction) at `time`.
void apply_seal_coverage_in_place(AtticScene& scene, const std::string& leak_id,
                                  double covered_fraction, double time);
AtticScene apply_seal_coverage(const AtticScene& scene, const std::string& leak_id,
                               double covered_fraction, double time);

enum class SurfaceKind { joist, drywall };

struct FloorSample {
  double height;
  SurfaceKind kind;
  int joist_index = -1;  ///< highest containing joist, -1 for drywall
};

/// Load-bearing height under xy. Joist edges count as joist.
FloorSample floor_height_at(const AtticScene& scene, const Vec2& xy);

std::string to_string(FixtureKind k);
FixtureKind fixture_kind_from_string(const std::string& s);

}  // namespace paris::world
