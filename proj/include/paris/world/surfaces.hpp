#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "paris/world/scene.hpp"

namespace paris::world {

enum class HitKind : std::uint8_t { drywall, joist, wall, ceiling, fixture };

struct SurfaceHit {
  double t;      ///< ray parameter (in units of the supplied direction)
  Vec3 point;
  Vec3 normal;   ///< facing the ray origin
  HitKind kind;
  int index;     ///< joist/fixture/wall index, -1 otherwise
};

/// Nearest intersection of origin + t*dir, t in (t_min, t_max], against the
/// drywall, joists, footprint walls, ceiling and fixtures. `dir` need not be
/// unit length.
std::optional<SurfaceHit> raycast(const AtticScene& scene, const Vec3& origin, const Vec3& dir,
                                  double t_max, double t_min = 1e-9);

/// Euclidean distance from p to the closest scene surface.
double distance_to_surfaces(const AtticScene& scene, const Vec3& p);

/// Albedo used by the colour renderer.
std::array<std::uint8_t, 3> surface_color(const AtticScene& scene, const SurfaceHit& hit);

}  // namespace paris::world
