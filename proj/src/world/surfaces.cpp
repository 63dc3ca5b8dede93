#include "paris/world/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace paris::world {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Best {
  std::optional<SurfaceHit> hit;
  double t_max;

  void offer(double t, const Vec3& p, const Vec3& n, HitKind kind, int index, const Vec3& dir) {
    if (!(t < t_max)) return;
    const Vec3 facing = n.dot(dir) > 0.0 ? Vec3(-n) : n;
    hit = SurfaceHit{t, p, facing, kind, index};
    t_max = t;
  }
};

// Joist box in its local frame: x in [0, L], y in [-w/2, w/2], z in [z0, z1].
struct JoistFrame {
  Vec2 o, d, n;
  double len, hw, z0, z1;

  JoistFrame(const Joist& j, double drywall)
      : o(j.origin), d(j.direction), n(j.normal()), len(j.length), hw(0.5 * j.width),
        z0(drywall), z1(drywall + j.top_height) {}

  Vec3 to_local(const Vec3& p) const {
    const Vec2 r = p.head<2>() - o;
    return {r.dot(d), r.dot(n), p.z()};
  }
  Vec3 dir_to_local(const Vec3& v) const { return {v.head<2>().dot(d), v.head<2>().dot(n), v.z()}; }
  Vec3 normal_to_world(const Vec3& ln) const {
    const Vec2 xy = ln.x() * d + ln.y() * n;
    return {xy.x(), xy.y(), ln.z()};
  }
};

void hit_joist(const JoistFrame& f, int index, const Vec3& origin, const Vec3& dir, double t_min,
               Best& best) {
  if (f.z1 <= f.z0) return;
  const Vec3 lo(0.0, -f.hw, f.z0);
  const Vec3 hi(f.len, f.hw, f.z1);
  const Vec3 o = f.to_local(origin);
  const Vec3 v = f.dir_to_local(dir);
  double t0 = -kInf, t1 = kInf;
  int axis0 = -1;
  double sign0 = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (v[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return;
      continue;
    }
    double ta = (lo[a] - o[a]) / v[a];
    double tb = (hi[a] - o[a]) / v[a];
    double s = -1.0;
    if (ta > tb) {
      std::swap(ta, tb);
      s = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      axis0 = a;
      sign0 = s;
    }
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || axis0 < 0) return;
  if (t0 <= t_min) return;  // origin inside or behind: only entry faces count
  Vec3 ln = Vec3::Zero();
  ln[axis0] = sign0;
  best.offer(t0, origin + t0 * dir, f.normal_to_world(ln), HitKind::joist, index, dir);
}

void hit_plane_rect(const Vec3& origin, const Vec3& dir, double t_min, const Vec3& c, const Vec3& n,
                    const Vec3& u, double hu, const Vec3& v, double hv, HitKind kind, int index,
                    Best& best) {
  const double denom = n.dot(dir);
  if (denom == 0.0) return;
  const double t = n.dot(c - origin) / denom;
  if (t <= t_min || !(t < best.t_max)) return;
  const Vec3 p = origin + t * dir;
  const Vec3 r = p - c;
  if (std::abs(r.dot(u)) > hu || std::abs(r.dot(v)) > hv) return;
  best.offer(t, p, n, kind, index, dir);
}

void hit_disc(const Vec3& origin, const Vec3& dir, double t_min, const Vec3& c, const Vec3& n,
              double radius, int index, Best& best) {
  const double denom = n.dot(dir);
  if (denom == 0.0) return;
  const double t = n.dot(c - origin) / denom;
  if (t <= t_min || !(t < best.t_max)) return;
  const Vec3 p = origin + t * dir;
  if ((p - c).squaredNorm() > radius * radius) return;
  best.offer(t, p, n, HitKind::fixture, index, dir);
}

void hit_cylinder(const Vec3& origin, const Vec3& dir, double t_min, const Vec3& base, const Vec3& axis,
                  double radius, int index, Best& best) {
  const double len = axis.norm();
  if (len == 0.0) return;
  const Vec3 a = axis / len;
  const Vec3 w = origin - base;
  const Vec3 dp = dir - dir.dot(a) * a;
  const Vec3 wp = w - w.dot(a) * a;
  const double A = dp.squaredNorm();
  if (A == 0.0) return;
  const double B = 2.0 * dp.dot(wp);
  const double C = wp.squaredNorm() - radius * radius;
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
    if (t <= t_min || !(t < best.t_max)) continue;
    const Vec3 p = origin + t * dir;
    const double h = (p - base).dot(a);
    if (h < 0.0 || h > len) continue;
    const Vec3 radial = (p - base) - h * a;
    best.offer(t, p, radial.normalized(), HitKind::fixture, index, dir);
    return;
  }
}

double dist_rect(const Vec3& p, const Vec3& c, const Vec3& n, const Vec3& u, double hu, const Vec3& v,
                 double hv) {
  const Vec3 r = p - c;
  const double du = std::max(0.0, std::abs(r.dot(u)) - hu);
  const double dv = std::max(0.0, std::abs(r.dot(v)) - hv);
  const double dn = r.dot(n);
  return std::sqrt(du * du + dv * dv + dn * dn);
}

double dist_disc(const Vec3& p, const Vec3& c, const Vec3& n, double radius) {
  const Vec3 r = p - c;
  const double dn = r.dot(n);
  const double radial = (r - dn * n).norm();
  const double dr = std::max(0.0, radial - radius);
  return std::sqrt(dr * dr + dn * dn);
}

double dist_cylinder(const Vec3& p, const Vec3& base, const Vec3& axis, double radius) {
  const double len = axis.norm();
  if (len == 0.0) return kInf;
  const Vec3 a = axis / len;
  const Vec3 r = p - base;
  const double h = r.dot(a);
  const double radial = (r - h * a).norm();
  const double dh = h < 0.0 ? -h : (h > len ? h - len : 0.0);
  const double dr = radial - radius;
  return std::sqrt(dh * dh + dr * dr);
}

// Distance to the surface of a box given in local coordinates.
double dist_box_surface(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  Vec3 out;
  bool inside = true;
  for (int a = 0; a < 3; ++a) {
    if (q[a] < lo[a]) {
      out[a] = lo[a] - q[a];
      inside = false;
    } else if (q[a] > hi[a]) {
      out[a] = q[a] - hi[a];
      inside = false;
    } else {
      out[a] = 0.0;
    }
  }
  if (!inside) return out.norm();
  double m = kInf;
  for (int a = 0; a < 3; ++a) m = std::min({m, q[a] - lo[a], hi[a] - q[a]});
  return m;
}

}  // namespace

std::optional<SurfaceHit> raycast(const AtticScene& scene, const Vec3& origin, const Vec3& dir,
                                  double t_max, double t_min) {
  Best best{std::nullopt, t_max};
  const double W = scene.footprint.x();
  const double L = scene.footprint.y();
  const double z0 = scene.drywall_level;
  const double top = scene.volume_top();
  const Vec3 centre(0.5 * W, 0.5 * L, z0);

  // Fixtures first so a flush fixture wins ties against the drywall.
  for (std::size_t i = 0; i < scene.fixtures.size(); ++i) {
    const Fixture& f = scene.fixtures[i];
    const Vec3 c = f.pose.translation();
    const Mat3 R = f.pose.linear();
    const int idx = static_cast<int>(i);
    if (const auto* circ = std::get_if<CircleShape>(&f.shape)) {
      hit_disc(origin, dir, t_min, c, R.col(2), circ->radius, idx, best);
    } else if (const auto* rect = std::get_if<RectangleShape>(&f.shape)) {
      hit_plane_rect(origin, dir, t_min, c, R.col(2), R.col(0), 0.5 * rect->w, R.col(1), 0.5 * rect->h,
                     HitKind::fixture, idx, best);
    } else if (const auto* cyl = std::get_if<CylinderShape>(&f.shape)) {
      hit_cylinder(origin, dir, t_min, c, cyl->axis, cyl->radius, idx, best);
    }
  }
  for (std::size_t i = 0; i < scene.joists.size(); ++i) {
    hit_joist(JoistFrame(scene.joists[i], z0), static_cast<int>(i), origin, dir, t_min, best);
  }
  hit_plane_rect(origin, dir, t_min, centre, Vec3::UnitZ(), Vec3::UnitX(), 0.5 * W, Vec3::UnitY(), 0.5 * L,
                 HitKind::drywall, -1, best);
  if (scene.ceiling_height) {
    hit_plane_rect(origin, dir, t_min, Vec3(0.5 * W, 0.5 * L, *scene.ceiling_height), Vec3::UnitZ(),
                   Vec3::UnitX(), 0.5 * W, Vec3::UnitY(), 0.5 * L, HitKind::ceiling, -1, best);
  }
  if (scene.walls) {
    const double hz = 0.5 * (top - z0);
    const double cz = z0 + hz;
    hit_plane_rect(origin, dir, t_min, Vec3(0, 0.5 * L, cz), Vec3::UnitX(), Vec3::UnitY(), 0.5 * L,
                   Vec3::UnitZ(), hz, HitKind::wall, 0, best);
    hit_plane_rect(origin, dir, t_min, Vec3(W, 0.5 * L, cz), Vec3::UnitX(), Vec3::UnitY(), 0.5 * L,
                   Vec3::UnitZ(), hz, HitKind::wall, 1, best);
    hit_plane_rect(origin, dir, t_min, Vec3(0.5 * W, 0, cz), Vec3::UnitY(), Vec3::UnitX(), 0.5 * W,
                   Vec3::UnitZ(), hz, HitKind::wall, 2, best);
    hit_plane_rect(origin, dir, t_min, Vec3(0.5 * W, L, cz), Vec3::UnitY(), Vec3::UnitX(), 0.5 * W,
                   Vec3::UnitZ(), hz, HitKind::wall, 3, best);
  }
  return best.hit;
}

double distance_to_surfaces(const AtticScene& scene, const Vec3& p) {
  const double W = scene.footprint.x();
  const double L = scene.footprint.y();
  const double z0 = scene.drywall_level;
  const double top = scene.volume_top();
  double d = dist_rect(p, Vec3(0.5 * W, 0.5 * L, z0), Vec3::UnitZ(), Vec3::UnitX(), 0.5 * W, Vec3::UnitY(),
                       0.5 * L);
  if (scene.ceiling_height) {
    d = std::min(d, dist_rect(p, Vec3(0.5 * W, 0.5 * L, *scene.ceiling_height), Vec3::UnitZ(), Vec3::UnitX(),
                              0.5 * W, Vec3::UnitY(), 0.5 * L));
  }
  if (scene.walls) {
    const double hz = 0.5 * (top - z0);
    const double cz = z0 + hz;
    d = std::min(d, dist_rect(p, Vec3(0, 0.5 * L, cz), Vec3::UnitX(), Vec3::UnitY(), 0.5 * L, Vec3::UnitZ(), hz));
    d = std::min(d, dist_rect(p, Vec3(W, 0.5 * L, cz), Vec3::UnitX(), Vec3::UnitY(), 0.5 * L, Vec3::UnitZ(), hz));
    d = std::min(d, dist_rect(p, Vec3(0.5 * W, 0, cz), Vec3::UnitY(), Vec3::UnitX(), 0.5 * W, Vec3::UnitZ(), hz));
    d = std::min(d, dist_rect(p, Vec3(0.5 * W, L, cz), Vec3::UnitY(), Vec3::UnitX(), 0.5 * W, Vec3::UnitZ(), hz));
  }
  for (const Joist& j : scene.joists) {
    const JoistFrame f(j, z0);
    d = std::min(d, dist_box_surface(f.to_local(p), Vec3(0.0, -f.hw, f.z0), Vec3(f.len, f.hw, f.z1)));
  }
  for (const Fixture& f : scene.fixtures) {
    const Vec3 c = f.pose.translation();
    const Mat3 R = f.pose.linear();
    if (const auto* circ = std::get_if<CircleShape>(&f.shape)) {
      d = std::min(d, dist_disc(p, c, R.col(2), circ->radius));
    } else if (const auto* rect = std::get_if<RectangleShape>(&f.shape)) {
      d = std::min(d, dist_rect(p, c, R.col(2), R.col(0), 0.5 * rect->w, R.col(1), 0.5 * rect->h));
    } else if (const auto* cyl = std::get_if<CylinderShape>(&f.shape)) {
      d = std::min(d, dist_cylinder(p, c, cyl->axis, cyl->radius));
    }
  }
  return d;
}

std::array<std::uint8_t, 3> surface_color(const AtticScene& scene, const SurfaceHit& hit) {
  switch (hit.kind) {
    case HitKind::drywall: return {232, 230, 222};
    case HitKind::joist: return {168, 124, 74};
    case HitKind::wall: return {196, 184, 160};
    case HitKind::ceiling: return {150, 132, 110};
    case HitKind::fixture:
      switch (scene.fixtures[static_cast<std::size_t>(hit.index)].kind) {
        case FixtureKind::light_fixture: return {210, 210, 215};
        case FixtureKind::fan_duct: return {170, 175, 180};
        case FixtureKind::junction_box: return {70, 90, 160};
        case FixtureKind::conduit: return {120, 120, 120};
        case FixtureKind::chimney: return {150, 60, 50};
      }
  }
  return {0, 0, 0};
}

}  // namespace paris::world
