#pragma once

#include <array>
#include <vector>

#include "paris/common/geometry.hpp"

namespace paris::seal {

/// Triples whose triangle area falls below this are treated as collinear.
inline constexpr double kCollinearArea = 1e-12;

/// Circular arc through three waypoints, or a two-piece line when they are
/// collinear (degenerate_line).
struct ArcSegment {
  std::array<Vec3, 3> waypoints;
  std::array<double, 3> speeds{};
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  bool degenerate_line = false;
  Vec3 normal = Vec3::UnitZ();  ///< arc plane normal; p0 -> p1 -> p2 turns counter-clockwise about it
  double angle_mid = 0.0;       ///< angle of p1 measured from p0
  double sweep = 0.0;           ///< angle of p2 measured from p0

  double length() const;
  /// Arc length from p0 to p1.
  double length_to_mid() const;
  /// Point at arc length s from p0 (clamped to the segment).
  Vec3 point_at(double s) const;
  /// Commanded speed at arc length s: piecewise linear between waypoint speeds.
  double speed_at(double s) const;
  /// Points at most `spacing` apart from p0 to p2; p0, p1 and p2 are emitted
  /// exactly as given.
  std::vector<Vec3> sample(double spacing) const;
};

/// Throws RuntimeError for coincident points or non-positive speeds.
ArcSegment plan_arc(const Vec3& p0, const Vec3& p1, const Vec3& p2, const std::array<double, 3>& speeds);

/// Circumcentre of a non-degenerate triangle.
Vec3 circumcenter(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace paris::seal
