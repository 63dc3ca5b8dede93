#include "paris/perception/roi.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "paris/common/error.hpp"

namespace paris::perception {
namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xc2b2ae3d27d4eb4full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667b19e3779f9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Uniform grid over point indices for fixed-radius neighbour queries.
class Grid {
 public:
  Grid(const std::vector<ThermalPoint>& pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(pts[i].position)].push_back(static_cast<int>(i));
  }

  /// Indices within radius of p, ascending.
  std::vector<int> near(const Vec3& p, double radius) const {
    std::vector<int> out;
    const CellKey k = key(p);
    const double r2 = radius * radius;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == cells_.end()) continue;
          for (int j : it->second)
            if ((pts_[static_cast<std::size_t>(j)].position - p).squaredNorm() <= r2) out.push_back(j);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  CellKey key(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  const std::vector<ThermalPoint>& pts_;
  double cell_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

struct Frame3 {
  Vec3 centroid;
  Vec3 e1, e2, n;  ///< principal axes, n has the smallest spread
};

Frame3 principal_frame(const std::vector<ThermalPoint>& pts, const std::vector<int>& idx) {
  Frame3 f;
  f.centroid = Vec3::Zero();
  for (int i : idx) f.centroid += pts[static_cast<std::size_t>(i)].position;
  f.centroid /= static_cast<double>(idx.size());
  Mat3 c = Mat3::Zero();
  for (int i : idx) {
    const Vec3 d = pts[static_cast<std::size_t>(i)].position - f.centroid;
    c += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(c);
  f.n = es.eigenvectors().col(0);
  f.e2 = es.eigenvectors().col(1);
  f.e1 = es.eigenvectors().col(2);
  return f;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
      x = parent_[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
  }

 private:
  std::vector<int> parent_;
};

struct CircleFit {
  Vec2 center;
  double radius;
  double rms;
  double coverage_deg;
};

CircleFit fit_circle(const std::vector<Vec2>& q) {
  // Algebraic fit, then Gauss-Newton on the geometric residual.
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (const auto& p : q) {
    const Eigen::Vector3d row(p.x(), p.y(), 1.0);
    const double rhs = -(p.squaredNorm());
    a += row * row.transpose();
    b += row * rhs;
  }
  const Eigen::Vector3d s = a.ldlt().solve(b);
  Vec2 c(-0.5 * s[0], -0.5 * s[1]);
  double r = std::sqrt(std::max(0.0, c.squaredNorm() - s[2]));
  for (int it = 0; it < 30 && std::isfinite(r); ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (const auto& p : q) {
      const Vec2 d = p - c;
      const double dist = d.norm();
      if (dist < 1e-12) continue;
      const Eigen::Vector3d j(-d.x() / dist, -d.y() / dist, -1.0);
      const double res = dist - r;
      jtj += j * j.transpose();
      jtr += j * res;
    }
    const Eigen::Vector3d step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) break;
    c += step.head<2>();
    r += step[2];
    if (step.norm() < 1e-12) break;
  }
  CircleFit f{c, std::abs(r), 0.0, 0.0};
  double ss = 0.0;
  std::array<bool, 36> bins{};
  for (const auto& p : q) {
    const Vec2 d = p - c;
    ss += (d.norm() - f.radius) * (d.norm() - f.radius);
    double ang = std::atan2(d.y(), d.x()) + kPi;
    const auto bin = std::min<std::size_t>(35, static_cast<std::size_t>(ang / (2.0 * kPi) * 36.0));
    bins[bin] = true;
  }
  f.rms = std::sqrt(ss / static_cast<double>(q.size()));
  f.coverage_deg = 10.0 * static_cast<double>(std::count(bins.begin(), bins.end(), true));
  return f;
}

Iso3 frame_pose(const Vec3& origin, const Vec3& axis, const Vec3& normal) {
  const Vec3 x = (axis - axis.dot(normal) * normal).normalized();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = normal.cross(x);
  r.col(2) = normal;
  return make_iso(origin, r);
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::vector<ThermalPoint> fuse_thermal(const std::vector<Vec3>& stereo_points, const sensors::ThermalImage& thermal,
                                       const Iso3& stereo_T_thermal, const sensors::CameraIntrinsics& k) {
  if (thermal.width != k.width || thermal.height != k.height)
    throw RuntimeError("thermal image does not match the intrinsics");
  std::vector<ThermalPoint> out;
  const Iso3 thermal_T_stereo = stereo_T_thermal.inverse();
  for (const auto& p : stereo_points) {
    const auto px = k.project(thermal_T_stereo * p);
    if (!px) continue;
    const double u = px->x(), v = px->y();
    if (!(u >= 0.0 && v >= 0.0 && u <= k.width - 1 && v <= k.height - 1)) continue;
    const int u0 = std::min(static_cast<int>(std::floor(u)), k.width - 2 < 0 ? 0 : k.width - 2);
    const int v0 = std::min(static_cast<int>(std::floor(v)), k.height - 2 < 0 ? 0 : k.height - 2);
    const int u1 = std::min(u0 + 1, k.width - 1), v1 = std::min(v0 + 1, k.height - 1);
    const double fu = u - u0, fv = v - v0;
    const double t = (1 - fu) * (1 - fv) * thermal.at(u0, v0) + fu * (1 - fv) * thermal.at(u1, v0) +
                     (1 - fu) * fv * thermal.at(u0, v1) + fu * fv * thermal.at(u1, v1);
    out.push_back({p, t, *px});
  }
  return out;
}

std::vector<double> gradient_magnitudes(const std::vector<ThermalPoint>& pts, double radius) {
  std::vector<double> g(pts.size(), 0.0);
  if (pts.empty()) return g;
  const Grid grid(pts, radius);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto nb = grid.near(pts[i].position, radius);
    if (nb.size() < 6) continue;
    const Frame3 f = principal_frame(pts, nb);
    double tm = 0.0;
    for (int j : nb) tm += pts[static_cast<std::size_t>(j)].temperature;
    tm /= static_cast<double>(nb.size());
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    for (int j : nb) {
      const Vec3 d = pts[static_cast<std::size_t>(j)].position - f.centroid;
      const Eigen::Vector2d x(d.dot(f.e1), d.dot(f.e2));
      a += x * x.transpose();
      b += x * (pts[static_cast<std::size_t>(j)].temperature - tm);
    }
    if (std::abs(a.determinant()) < 1e-18) continue;
    const Eigen::Vector2d s = a.ldlt().solve(b);
    g[i] = s.norm();
  }
  return g;
}

std::vector<Roi> detect_rois(const std::vector<ThermalPoint>& pts, const RoiParams& p) {
  if (!(p.gradient_threshold > 0.0) || !(p.cluster_radius > 0.0) || p.min_points <= 0)
    throw RuntimeError("ROI thresholds must be positive");
  std::vector<Roi> rois;
  if (pts.empty()) return rois;
  const auto grad = gradient_magnitudes(pts, p.cluster_radius);
  const Grid grid(pts, p.cluster_radius);

  std::vector<int> hot;
  std::vector<char> is_hot(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (grad[i] >= p.gradient_threshold) {
      hot.push_back(static_cast<int>(i));
      is_hot[i] = 1;
    }
  UnionFind uf(pts.size());
  for (int i : hot)
    for (int j : grid.near(pts[static_cast<std::size_t>(i)].position, p.cluster_radius))
      if (is_hot[static_cast<std::size_t>(j)]) uf.unite(i, j);

  std::vector<std::vector<int>> clusters;
  {
    std::unordered_map<int, std::size_t> slot;
    for (int i : hot) {
      const int r = uf.find(i);
      auto [it, fresh] = slot.try_emplace(r, clusters.size());
      if (fresh) clusters.emplace_back();
      clusters[it->second].push_back(i);
    }
  }
  // Members are ascending; order clusters by their smallest member.
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  for (const auto& cl : clusters) {
    if (static_cast<int>(cl.size()) < p.min_points) continue;
    std::vector<char> in_n(pts.size(), 0);
    for (int i : cl)
      for (int j : grid.near(pts[static_cast<std::size_t>(i)].position, p.cluster_radius)) in_n[static_cast<std::size_t>(j)] = 1;
    std::vector<int> hood;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (in_n[i]) hood.push_back(static_cast<int>(i));

    std::vector<double> temps;
    for (int i : hood) temps.push_back(pts[static_cast<std::size_t>(i)].temperature);
    std::vector<double> sorted = temps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double tmin = sorted.front(), tmax = sorted.back();
    const double extreme = (median - tmin > tmax - median) ? tmin : tmax;
    const double range = std::abs(tmax - tmin);
    std::vector<int> core;
    for (std::size_t k = 0; k < hood.size(); ++k)
      if (std::abs(temps[k] - extreme) <= 0.2 * range) core.push_back(hood[k]);
    if (core.size() < 3) core = cl;

    const Frame3 plane = principal_frame(pts, hood);
    Vec3 normal = plane.n;
    const Vec3 look = p.viewpoint ? Vec3(*p.viewpoint - plane.centroid) : Vec3::UnitZ();
    if (normal.dot(look) < 0.0) normal = -normal;
    const Vec3 e1 = plane.e1, e2 = normal.cross(e1);

    Vec3 ccore = Vec3::Zero();
    for (int i : core) ccore += pts[static_cast<std::size_t>(i)].position;
    ccore /= static_cast<double>(core.size());
    std::vector<Vec2> q;
    for (int i : core) {
      const Vec3 d = pts[static_cast<std::size_t>(i)].position - ccore;
      q.emplace_back(d.dot(e1), d.dot(e2));
    }

    Roi roi;
    roi.point_count = static_cast<int>(cl.size());
    for (int i : cl) roi.peak_gradient = std::max(roi.peak_gradient, grad[static_cast<std::size_t>(i)]);
    double dt = 0.0;
    for (int i : core) dt += pts[static_cast<std::size_t>(i)].temperature - p.ambient;
    roi.mean_delta_t = dt / static_cast<double>(core.size());

    bool done = false;
    if (q.size() >= 5) {
      const CircleFit cf = fit_circle(q);
      if (std::isfinite(cf.radius) && cf.radius > 0.0 && cf.rms < 0.2 * cf.radius && cf.coverage_deg >= 270.0) {
        const Vec3 c = ccore + cf.center.x() * e1 + cf.center.y() * e2;
        roi.geometry = CircleRoi{c, cf.radius, normal};
        roi.map_frame_pose = frame_pose(c, e1, normal);
        done = true;
      }
    }
    // Principal in-plane axis of the core.
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& v : q) cov += v * v.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es2(cov);
    const Vec2 major = es2.eigenvectors().col(1);
    const Vec3 axis = (major.x() * e1 + major.y() * e2).normalized();
    const Vec3 minor = normal.cross(axis);
    double smin = 1e300, smax = -1e300, lat_max = 0.0, lat_ss = 0.0;
    for (int i : core) {
      const Vec3 d = pts[static_cast<std::size_t>(i)].position - ccore;
      const double s = d.dot(axis);
      const double l = d.dot(minor);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
      lat_max = std::max(lat_max, std::abs(l));
      lat_ss += l * l;
    }
    const double lat_rms = std::sqrt(lat_ss / static_cast<double>(core.size()));
    if (!done) {
      const double length = smax - smin;
      const double width = 2.0 * lat_max;
      if (lat_rms < 0.5 * p.cluster_radius && width > 0.0 && length / width >= 3.0) {
        const double shrink = std::min(lat_max, 0.25 * length);
        const Vec3 a = ccore + (smin + shrink) * axis, b = ccore + (smax - shrink) * axis;
        roi.geometry = SegmentRoi{a, b, normal};
        roi.map_frame_pose = frame_pose(0.5 * (a + b), axis, normal);
        done = true;
      }
    }
    if (!done) {
      const Vec3 c = ccore + 0.5 * (smin + smax) * axis;
      double m1 = 0.0, m2 = 0.0;
      for (int i : core) {
        const Vec3 d = pts[static_cast<std::size_t>(i)].position - c;
        m1 = std::max(m1, std::abs(d.dot(axis)));
        m2 = std::max(m2, std::abs(d.dot(minor)));
      }
      roi.geometry = PatchRoi{c, axis, Vec2(m1, m2), normal};
      roi.map_frame_pose = frame_pose(c, axis, normal);
    }
    rois.push_back(std::move(roi));
  }
  for (std::size_t i = 0; i < rois.size(); ++i) rois[i].id = "roi-" + std::to_string(i + 1);
  return rois;
}

const char* roi_type(const Roi& roi) {
  if (std::holds_alternative<CircleRoi>(roi.geometry)) return "circle";
  if (std::holds_alternative<SegmentRoi>(roi.geometry)) return "segment";
  return "patch";
}

Vec3 roi_reference_point(const Roi& roi) {
  if (const auto* c = std::get_if<CircleRoi>(&roi.geometry)) return c->center;
  if (const auto* s = std::get_if<SegmentRoi>(&roi.geometry)) return 0.5 * (s->p0 + s->p1);
  return std::get<PatchRoi>(roi.geometry).centroid;
}

Vec3 roi_normal(const Roi& roi) {
  return std::visit([](const auto& g) { return g.normal; }, roi.geometry);
}

Json roi_to_json(const Roi& roi) {
  Json j;
  j["schema"] = kRoiSchema;
  j["id"] = roi.id;
  j["type"] = roi_type(roi);
  if (const auto* c = std::get_if<CircleRoi>(&roi.geometry)) {
    j["center"] = vec_json(c->center);
    j["radius"] = c->radius;
    j["normal"] = vec_json(c->normal);
  } else if (const auto* s = std::get_if<SegmentRoi>(&roi.geometry)) {
    j["p0"] = vec_json(s->p0);
    j["p1"] = vec_json(s->p1);
    j["normal"] = vec_json(s->normal);
  } else {
    const auto& pt = std::get<PatchRoi>(roi.geometry);
    j["centroid"] = vec_json(pt.centroid);
    j["axis"] = vec_json(pt.axis);
    j["extent"] = Json::array({pt.extent.x(), pt.extent.y()});
    j["normal"] = vec_json(pt.normal);
  }
  j["peak_gradient"] = roi.peak_gradient;
  j["mean_delta_t"] = roi.mean_delta_t;
  j["point_count"] = roi.point_count;
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 3; ++c) row.push_back(roi.map_frame_pose.linear()(r, c));
    rot.push_back(row);
  }
  j["map_frame_pose"] = {{"position", vec_json(roi.map_frame_pose.translation())}, {"rotation", rot}};
  return j;
}

Json rois_to_json(const std::vector<Roi>& rois) {
  Json a = Json::array();
  for (const auto& r : rois) a.push_back(roi_to_json(r));
  return a;
}

Roi roi_from_json(const Json& j) {
  if (!j.is_object() || j.value("schema", "") != kRoiSchema) throw ParseError("unsupported ROI schema");
  Roi r;
  try {
    r.id = j.at("id").get<std::string>();
    const auto type = j.at("type").get<std::string>();
    if (type == "circle")
      r.geometry = CircleRoi{json_vec(j.at("center")), j.at("radius").get<double>(), json_vec(j.at("normal"))};
    else if (type == "segment")
      r.geometry = SegmentRoi{json_vec(j.at("p0")), json_vec(j.at("p1")), json_vec(j.at("normal"))};
    else if (type == "patch")
      r.geometry = PatchRoi{json_vec(j.at("centroid")), json_vec(j.at("axis")),
                            Vec2(j.at("extent").at(0).get<double>(), j.at("extent").at(1).get<double>()),
                            json_vec(j.at("normal"))};
    else
      throw ParseError("unknown ROI type " + type);
    r.peak_gradient = j.at("peak_gradient").get<double>();
    r.mean_delta_t = j.at("mean_delta_t").get<double>();
    r.point_count = j.at("point_count").get<int>();
    const auto& mp = j.at("map_frame_pose");
    Mat3 rot;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) rot(a, b) = mp.at("rotation").at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b)).get<double>();
    r.map_frame_pose = make_iso(json_vec(mp.at("position")), rot);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("ROI: ") + e.what());
  }
  return r;
}

namespace {

bool augment(int r, const std::vector<std::vector<int>>& adj, std::vector<int>& leak_of, std::vector<char>& seen) {
  for (int l : adj[static_cast<std::size_t>(r)]) {
    if (seen[static_cast<std::size_t>(l)]) continue;
    seen[static_cast<std::size_t>(l)] = 1;
    if (leak_of[static_cast<std::size_t>(l)] < 0 || augment(leak_of[static_cast<std::size_t>(l)], adj, leak_of, seen)) {
      leak_of[static_cast<std::size_t>(l)] = r;
      return true;
    }
  }
  return false;
}

}  // namespace

MatchResult match_rois(const std::vector<Roi>& rois, const std::vector<world::LeakSource>& leaks, double radius) {
  std::vector<std::vector<int>> adj(rois.size());
  for (std::size_t i = 0; i < rois.size(); ++i)
    for (std::size_t k = 0; k < leaks.size(); ++k)
      if ((roi_reference_point(rois[i]) - world::reference_point(leaks[k].geometry)).norm() <= radius)
        adj[i].push_back(static_cast<int>(k));
  std::vector<int> leak_of(leaks.size(), -1);
  for (std::size_t i = 0; i < rois.size(); ++i) {
    std::vector<char> seen(leaks.size(), 0);
    augment(static_cast<int>(i), adj, leak_of, seen);
  }
  MatchResult m;
  for (std::size_t k = 0; k < leaks.size(); ++k)
    if (leak_of[k] >= 0) m.pairs.emplace_back(leak_of[k], static_cast<int>(k));
  std::sort(m.pairs.begin(), m.pairs.end());
  const auto matched = static_cast<double>(m.pairs.size());
  m.precision = rois.empty() ? 1.0 : matched / static_cast<double>(rois.size());
  m.recall = leaks.empty() ? 1.0 : matched / static_cast<double>(leaks.size());
  return m;
}

}  // namespace paris::perception
