#include "paris/world/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "paris/common/error.hpp"
#include "paris/world/surfaces.hpp"

namespace paris::world {
namespace {

constexpr int kSchemaVersion = 1;

std::string fmt_m(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << v;
  return os.str();
}

Vec3 annulus_point(const AnnulusGeometry& a, double angle) {
  const Vec3 n = a.normal.normalized();
  const Vec3 u = any_perpendicular(n);
  const Vec3 v = n.cross(u);
  return a.center + a.radius * (std::cos(angle) * u + std::sin(angle) * v);
}

Iso3 read_pose(ObjectReader& r) {
  const Vec3 pos = r.vec3("position");
  Vec3 rpy = Vec3::Zero();
  if (r.has("rpy")) rpy = r.vec3("rpy");
  return make_iso(pos, rpy_to_matrix(rpy.x(), rpy.y(), rpy.z()));
}

Json pose_json(const Iso3& p) {
  const Vec3 t = p.translation();
  const Vec3 ypr = p.linear().eulerAngles(2, 1, 0);
  return Json{{"position", {t.x(), t.y(), t.z()}}, {"rpy", {ypr[2], ypr[1], ypr[0]}}};
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Joist read_joist(ObjectReader r) {
  Joist j;
  j.origin = r.vec2("origin");
  const Vec2 d = r.vec2("direction");
  if (d.norm() == 0.0) throw ValidationError(r.path() + ": joist direction must be nonzero");
  j.direction = d.normalized();
  j.length = r.number("length");
  j.width = r.number("width", 0.038);
  j.top_height = r.number("top_height", 0.14);
  r.finish();
  return j;
}

Fixture read_fixture(ObjectReader r, std::size_t index) {
  Fixture f;
  f.id = r.string("id", "fixture-" + std::to_string(index));
  try {
    f.kind = fixture_kind_from_string(r.string("kind"));
  } catch (const ParseError& e) {
    throw ParseError(r.child_path("kind") + ": " + e.what());
  }
  f.pose = read_pose(r);
  ObjectReader s = r.object("shape");
  const std::string type = s.string("type");
  if (type == "circle") {
    f.shape = CircleShape{s.number("radius")};
  } else if (type == "rectangle") {
    f.shape = RectangleShape{s.number("w"), s.number("h")};
  } else if (type == "cylinder") {
    f.shape = CylinderShape{s.number("radius"), s.vec3("axis")};
  } else {
    throw ParseError(s.child_path("type") + ": unknown shape '" + type + "'");
  }
  s.finish();
  r.finish();
  return f;
}

LeakSource read_leak(ObjectReader r) {
  LeakSource l;
  l.id = r.string("id");
  ObjectReader g = r.object("geometry");
  const std::string type = g.string("type");
  if (type == "annulus") {
    AnnulusGeometry a{g.vec3("center"), g.number("radius"), g.number("width", 0.01),
                      g.vec3("normal", Vec3::UnitZ())};
    if (a.normal.norm() == 0.0) throw ValidationError(g.child_path("normal") + ": must be nonzero");
    a.normal.normalize();
    l.geometry = a;
  } else if (type == "segment") {
    l.geometry = SegmentGeometry{g.vec3("p0"), g.vec3("p1"), g.number("width", 0.005)};
  } else if (type == "point") {
    l.geometry = PointGeometry{g.vec3("center"), g.number("sigma", 0.0)};
  } else {
    throw ParseError(g.child_path("type") + ": unknown leak geometry '" + type + "'");
  }
  g.finish();
  l.delta_t = r.number("delta_t_k", -10.0);
  l.sigma = r.number("sigma_m", 0.03);
  l.relaxation_tau = r.number("relaxation_tau_s", 600.0);
  l.sealed_fraction = r.number("sealed_fraction", 0.0);
  if (r.has("seal_time_s")) l.seal_time = r.number("seal_time_s");
  if (l.sealed_fraction > 0.0) {
    l.seal_history.push_back({l.seal_time.value_or(0.0), l.sealed_fraction});
    if (!l.seal_time) l.seal_time = 0.0;
  }
  r.finish();
  return l;
}

void check_joist_spacing(const AtticScene& s) {
  const auto& js = s.joists;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const Vec2 n = js[i].normal();
    const double off_i = n.dot(js[i].origin);
    const double a0 = js[i].direction.dot(js[i].origin);
    const double a1 = a0 + js[i].length;
    // Nearest parallel neighbour on the +normal side whose extent overlaps.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < js.size(); ++k) {
      if (k == i) continue;
      const Vec2& dk = js[k].direction;
      if (std::abs(js[i].direction.x() * dk.y() - js[i].direction.y() * dk.x()) > 1e-6) continue;
      const double sign = js[i].direction.dot(dk) > 0.0 ? 1.0 : -1.0;
      const double off_k = n.dot(js[k].origin);
      const double gap = off_k - off_i;
      if (gap <= 1e-6) continue;
      const double b0 = js[i].direction.dot(js[k].origin);
      const double b1 = b0 + sign * js[k].length;
      if (std::max(b0, b1) < a0 || std::min(b0, b1) > a1) continue;
      best = std::min(best, gap);
    }
    if (!std::isfinite(best)) continue;
    if (best < kMinJoistSpacing - 1e-9) {
      throw ValidationError("joist spacing below 0.30 m: " + fmt_m(best) + " m after joist " + std::to_string(i));
    }
    if (best > kMaxJoistSpacing + 1e-9) {
      throw ValidationError("joist spacing above 0.60 m: " + fmt_m(best) + " m after joist " + std::to_string(i));
    }
  }
}

std::vector<Vec3> geometry_probe_points(const LeakGeometry& g) {
  std::vector<Vec3> pts;
  if (const auto* a = std::get_if<AnnulusGeometry>(&g)) {
    for (int k = 0; k < 8; ++k) pts.push_back(annulus_point(*a, 2.0 * kPi * k / 8.0));
  } else if (const auto* s = std::get_if<SegmentGeometry>(&g)) {
    pts = {s->p0, 0.5 * (s->p0 + s->p1), s->p1};
  } else if (const auto* p = std::get_if<PointGeometry>(&g)) {
    pts = {p->center};
  }
  return pts;
}

}  // namespace

bool Joist::contains(const Vec2& xy) const {
  const Vec2 r = xy - origin;
  const double along = r.dot(direction);
  const double across = r.dot(normal());
  return along >= 0.0 && along <= length && std::abs(across) <= 0.5 * width;
}

double distance_to(const LeakGeometry& g, const Vec3& p) {
  if (const auto* a = std::get_if<AnnulusGeometry>(&g)) {
    const Vec3 n = a->normal;
    const Vec3 r = p - a->center;
    const double dn = r.dot(n);
    const double radial = (r - dn * n).norm();
    const double ring = std::sqrt((radial - a->radius) * (radial - a->radius) + dn * dn);
    return std::max(0.0, ring - 0.5 * a->width);
  }
  if (const auto* s = std::get_if<SegmentGeometry>(&g)) {
    return std::max(0.0, point_segment_distance(p, s->p0, s->p1) - 0.5 * s->width);
  }
  const auto& pt = std::get<PointGeometry>(g);
  return (p - pt.center).norm();
}

Vec3 reference_point(const LeakGeometry& g) {
  if (const auto* a = std::get_if<AnnulusGeometry>(&g)) return a->center;
  if (const auto* s = std::get_if<SegmentGeometry>(&g)) return 0.5 * (s->p0 + s->p1);
  return std::get<PointGeometry>(g).center;
}

double centerline_length(const LeakGeometry& g) {
  if (const auto* a = std::get_if<AnnulusGeometry>(&g)) return 2.0 * kPi * a->radius;
  if (const auto* s = std::get_if<SegmentGeometry>(&g)) return (s->p1 - s->p0).norm();
  return 0.0;
}

std::vector<Vec3> centerline_samples(const LeakGeometry& g, double spacing) {
  std::vector<Vec3> out;
  const double len = centerline_length(g);
  if (len <= 0.0) {
    out.push_back(reference_point(g));
    return out;
  }
  const int n = std::max(8, static_cast<int>(std::ceil(len / spacing)));
  if (const auto* a = std::get_if<AnnulusGeometry>(&g)) {
    for (int k = 0; k < n; ++k) out.push_back(annulus_point(*a, 2.0 * kPi * (k + 0.5) / n));
  } else {
    const auto& s = std::get<SegmentGeometry>(g);
    for (int k = 0; k < n; ++k) out.push_back(s.p0 + (s.p1 - s.p0) * ((k + 0.5) / n));
  }
  return out;
}

double LeakSource::falloff() const {
  if (const auto* p = std::get_if<PointGeometry>(&geometry); p && p->sigma > 0.0) return p->sigma;
  return sigma;
}

double LeakSource::strength_at(double t) const {
  double s = 1.0;
  for (const SealEvent& e : seal_history) {
    if (t < e.time) continue;
    s -= e.fraction_increment * (1.0 - std::exp(-(t - e.time) / relaxation_tau));
  }
  return std::clamp(s, 0.0, 1.0);
}

const LeakSource* AtticScene::find_leak(const std::string& id) const {
  for (const auto& l : leaks)
    if (l.id == id) return &l;
  return nullptr;
}

LeakSource* AtticScene::find_leak(const std::string& id) {
  for (auto& l : leaks)
    if (l.id == id) return &l;
  return nullptr;
}

const FiducialTag* AtticScene::find_tag(int id) const {
  for (const auto& t : tags)
    if (t.id == id) return &t;
  return nullptr;
}

bool AtticScene::in_footprint(const Vec2& xy) const {
  return xy.x() >= 0.0 && xy.y() >= 0.0 && xy.x() <= footprint.x() && xy.y() <= footprint.y();
}

std::string to_string(FixtureKind k) {
  switch (k) {
    case FixtureKind::light_fixture: return "light_fixture";
    case FixtureKind::fan_duct: return "fan_duct";
    case FixtureKind::junction_box: return "junction_box";
    case FixtureKind::conduit: return "conduit";
    case FixtureKind::chimney: return "chimney";
  }
  return "unknown";
}

FixtureKind fixture_kind_from_string(const std::string& s) {
  if (s == "light_fixture") return FixtureKind::light_fixture;
  if (s == "fan_duct") return FixtureKind::fan_duct;
  if (s == "junction_box") return FixtureKind::junction_box;
  if (s == "conduit") return FixtureKind::conduit;
  if (s == "chimney") return FixtureKind::chimney;
  throw ParseError("unknown fixture kind '" + s + "'");
}

void validate_scene(const AtticScene& s) {
  if (!(s.footprint.x() > 0.0) || !(s.footprint.y() > 0.0)) throw ValidationError("footprint must be positive");
  if (s.ambient_attic_temp == s.exterior_temp) {
    throw ValidationError("ambient attic temperature equals exterior temperature (no thermal contrast)");
  }
  if (s.ceiling_height && !(*s.ceiling_height > s.drywall_level)) {
    throw ValidationError("ceiling must be above the drywall");
  }
  for (std::size_t i = 0; i < s.joists.size(); ++i) {
    const Joist& j = s.joists[i];
    const std::string tag = "joist " + std::to_string(i);
    if (!(j.width > 0.0)) throw ValidationError(tag + ": width must be positive");
    if (!(j.length > 0.0)) throw ValidationError(tag + ": length must be positive");
    if (!(j.top_height >= 0.0)) throw ValidationError(tag + ": top_height must be non-negative");
  }
  check_joist_spacing(s);
  for (const Fixture& f : s.fixtures) {
    bool ok = true;
    if (const auto* c = std::get_if<CircleShape>(&f.shape)) ok = c->radius > 0.0;
    if (const auto* r = std::get_if<RectangleShape>(&f.shape)) ok = r->w > 0.0 && r->h > 0.0;
    if (const auto* y = std::get_if<CylinderShape>(&f.shape)) ok = y->radius > 0.0 && y->axis.norm() > 0.0;
    if (!ok) throw ValidationError("fixture '" + f.id + "': shape dimensions must be positive");
  }
  for (std::size_t i = 0; i < s.leaks.size(); ++i) {
    const LeakSource& l = s.leaks[i];
    const std::string tag = "leak '" + l.id + "'";
    for (std::size_t k = 0; k < i; ++k)
      if (s.leaks[k].id == l.id) throw ValidationError(tag + ": duplicate id");
    if (!(l.sigma > 0.0)) throw ValidationError(tag + ": sigma must be positive");
    if (!(l.relaxation_tau > 0.0)) throw ValidationError(tag + ": relaxation_tau must be positive");
    if (!(l.sealed_fraction >= 0.0 && l.sealed_fraction <= 1.0)) {
      throw ValidationError(tag + ": sealed_fraction must lie in [0, 1]");
    }
    if (const auto* a = std::get_if<AnnulusGeometry>(&l.geometry)) {
      if (!(a->radius > 0.0) || !(a->width >= 0.0)) throw ValidationError(tag + ": annulus dimensions invalid");
    }
    if (const auto* g = std::get_if<SegmentGeometry>(&l.geometry)) {
      if ((g->p1 - g->p0).norm() == 0.0 || !(g->width >= 0.0)) {
        throw ValidationError(tag + ": segment must have distinct endpoints");
      }
    }
    for (const Vec3& p : geometry_probe_points(l.geometry)) {
      if (distance_to_surfaces(s, p) > kSurfaceTolerance) {
        throw ValidationError(tag + ": geometry does not lie on a scene surface");
      }
    }
  }
  if (!(s.hatch.width >= 0.0) || !(s.hatch.height >= 0.0)) throw ValidationError("hatch dimensions must be >= 0");
  for (std::size_t i = 0; i < s.tags.size(); ++i) {
    if (!(s.tags[i].size > 0.0)) throw ValidationError("tag " + std::to_string(s.tags[i].id) + ": size must be positive");
    for (std::size_t k = 0; k < i; ++k)
      if (s.tags[k].id == s.tags[i].id) throw ValidationError("duplicate tag id " + std::to_string(s.tags[i].id));
  }
}

AtticScene load_scene(const Json& doc) {
  ObjectReader root(doc, "$");
  const auto version = root.integer("version");
  if (version != kSchemaVersion) {
    throw ParseError("$.version: unsupported scene schema version " + std::to_string(version));
  }
  AtticScene s;
  {
    ObjectReader sc = root.object("scene");
    s.footprint = sc.vec2("footprint");
    s.ambient_attic_temp = sc.number("ambient_attic_temp_k", 290.0);
    s.exterior_temp = sc.number("exterior_temp_k", 273.0);
    s.drywall_level = sc.number("drywall_level_m", 0.0);
    if (sc.has("ceiling_height_m")) s.ceiling_height = sc.number("ceiling_height_m");
    s.walls = sc.boolean("walls", true);
    sc.finish();
  }
  auto array_of = [&](const std::string& key) -> const Json* {
    const Json* a = root.raw_optional(key);
    if (a && !a->is_array()) throw ParseError("$." + key + ": expected an array");
    return a;
  };
  if (const Json* a = array_of("joists")) {
    for (std::size_t i = 0; i < a->size(); ++i)
      s.joists.push_back(read_joist(ObjectReader((*a)[i], "$.joists[" + std::to_string(i) + "]")));
  }
  if (const Json* a = array_of("fixtures")) {
    for (std::size_t i = 0; i < a->size(); ++i)
      s.fixtures.push_back(read_fixture(ObjectReader((*a)[i], "$.fixtures[" + std::to_string(i) + "]"), i));
  }
  if (const Json* a = array_of("leaks")) {
    for (std::size_t i = 0; i < a->size(); ++i)
      s.leaks.push_back(read_leak(ObjectReader((*a)[i], "$.leaks[" + std::to_string(i) + "]")));
  }
  if (const Json* a = array_of("tags")) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      ObjectReader t((*a)[i], "$.tags[" + std::to_string(i) + "]");
      FiducialTag tag;
      tag.id = static_cast<int>(t.integer("id"));
      tag.pose = read_pose(t);
      tag.size = t.number("size", 0.1);
      t.finish();
      s.tags.push_back(tag);
    }
  }
  {
    ObjectReader h = root.object("hatch");
    s.hatch.width = h.number("width", 0.57);
    s.hatch.height = h.number("height", 0.76);
    if (h.has("position")) s.hatch.position = h.vec2("position");
    h.finish();
  }
  root.raw_optional("robot");
  root.finish();
  validate_scene(s);
  return s;
}

AtticScene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return load_scene(doc);
}

Json scene_to_json(const AtticScene& s) {
  Json doc;
  doc["version"] = kSchemaVersion;
  Json sc{{"footprint", {s.footprint.x(), s.footprint.y()}},
          {"ambient_attic_temp_k", s.ambient_attic_temp},
          {"exterior_temp_k", s.exterior_temp},
          {"drywall_level_m", s.drywall_level},
          {"walls", s.walls}};
  if (s.ceiling_height) sc["ceiling_height_m"] = *s.ceiling_height;
  doc["scene"] = sc;
  doc["joists"] = Json::array();
  for (const Joist& j : s.joists) {
    doc["joists"].push_back({{"origin", {j.origin.x(), j.origin.y()}},
                             {"direction", {j.direction.x(), j.direction.y()}},
                             {"length", j.length},
                             {"width", j.width},
                             {"top_height", j.top_height}});
  }
  doc["fixtures"] = Json::array();
  for (const Fixture& f : s.fixtures) {
    Json fj = pose_json(f.pose);
    fj["id"] = f.id;
    fj["kind"] = to_string(f.kind);
    if (const auto* c = std::get_if<CircleShape>(&f.shape)) fj["shape"] = {{"type", "circle"}, {"radius", c->radius}};
    if (const auto* r = std::get_if<RectangleShape>(&f.shape))
      fj["shape"] = {{"type", "rectangle"}, {"w", r->w}, {"h", r->h}};
    if (const auto* y = std::get_if<CylinderShape>(&f.shape))
      fj["shape"] = {{"type", "cylinder"}, {"radius", y->radius}, {"axis", vec_json(y->axis)}};
    doc["fixtures"].push_back(fj);
  }
  doc["leaks"] = Json::array();
  for (const LeakSource& l : s.leaks) {
    Json g;
    if (const auto* a = std::get_if<AnnulusGeometry>(&l.geometry)) {
      g = {{"type", "annulus"}, {"center", vec_json(a->center)}, {"radius", a->radius}, {"width", a->width},
           {"normal", vec_json(a->normal)}};
    } else if (const auto* sg = std::get_if<SegmentGeometry>(&l.geometry)) {
      g = {{"type", "segment"}, {"p0", vec_json(sg->p0)}, {"p1", vec_json(sg->p1)}, {"width", sg->width}};
    } else {
      const auto& p = std::get<PointGeometry>(l.geometry);
      g = {{"type", "point"}, {"center", vec_json(p.center)}, {"sigma", p.sigma}};
    }
    Json lj{{"id", l.id},
            {"geometry", g},
            {"delta_t_k", l.delta_t},
            {"sigma_m", l.sigma},
            {"relaxation_tau_s", l.relaxation_tau},
            {"sealed_fraction", l.sealed_fraction}};
    if (l.seal_time) lj["seal_time_s"] = *l.seal_time;
    doc["leaks"].push_back(lj);
  }
  doc["tags"] = Json::array();
  for (const FiducialTag& t : s.tags) {
    Json tj = pose_json(t.pose);
    tj["id"] = t.id;
    tj["size"] = t.size;
    doc["tags"].push_back(tj);
  }
  doc["hatch"] = {{"width", s.hatch.width},
                  {"height", s.hatch.height},
                  {"position", {s.hatch.position.x(), s.hatch.position.y()}}};
  return doc;
}

double temperature_field(const AtticScene& scene, const Vec3& p, double time) {
  double t = scene.ambient_attic_temp;
  for (const LeakSource& l : scene.leaks) {
    const double d = distance_to(l.geometry, p);
    const double s = l.falloff();
    t += l.delta_t * std::exp(-(d * d) / (2.0 * s * s)) * l.strength_at(time);
  }
  return t;
}

double temperature_at(const AtticScene& scene, const Vec3& p, double time) {
  const double d = distance_to_surfaces(scene, p);
  if (d > kSurfaceTolerance) {
    throw RuntimeError("point is " + fmt_m(d) + " m off every scene surface (tolerance 0.001 m)");
  }
  return temperature_field(scene, p, time);
}

std::pair<double, double> temperature_bounds(const AtticScene& scene) {
  double lo = scene.ambient_attic_temp;
  double hi = scene.ambient_attic_temp;
  for (const LeakSource& l : scene.leaks) {
    lo += std::min(0.0, l.delta_t);
    hi += std::max(0.0, l.delta_t);
  }
  return {lo, hi};
}

void apply_seal_coverage_in_place(AtticScene& scene, const std::string& leak_id, double covered_fraction,
                                  double time) {
  LeakSource* l = scene.find_leak(leak_id);
  if (!l) throw RuntimeError("unknown leak id '" + leak_id + "'");
  if (!(covered_fraction >= 0.0 && covered_fraction <= 1.0)) {
    throw RuntimeError("covered_fraction must lie in [0, 1]");
  }
  if (covered_fraction <= l->sealed_fraction) return;
  l->seal_history.push_back({time, covered_fraction - l->sealed_fraction});
  l->sealed_fraction = covered_fraction;
  if (!l->seal_time) l->seal_time = time;
}

AtticScene apply_seal_coverage(const AtticScene& scene, const std::string& leak_id, double covered_fraction,
                               double time) {
  AtticScene out = scene;
  apply_seal_coverage_in_place(out, leak_id, covered_fraction, time);
  return out;
}

FloorSample floor_height_at(const AtticScene& scene, const Vec2& xy) {
  if (!scene.in_footprint(xy)) throw RuntimeError("point outside the scene footprint");
  FloorSample out{scene.drywall_level, SurfaceKind::drywall, -1};
  for (std::size_t i = 0; i < scene.joists.size(); ++i) {
    const Joist& j = scene.joists[i];
    if (!j.contains(xy)) continue;
    const double h = scene.drywall_level + j.top_height;
    if (out.kind == SurfaceKind::drywall || h > out.height) out = {h, SurfaceKind::joist, static_cast<int>(i)};
  }
  return out;
}

}  // namespace paris::world
