#include "paris/sim/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "paris/common/error.hpp"

namespace paris::sim {
namespace {

constexpr const char* kStreamNames[kStreamCount] = {"front_color", "front_depth", "rear_color",
                                                    "rear_depth",  "arm_thermal", "arm_color"};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

const char* to_string(Stream s) { return kStreamNames[static_cast<int>(s)]; }

Stream stream_from_string(const std::string& s) {
  for (int i = 0; i < kStreamCount; ++i)
    if (s == kStreamNames[i]) return static_cast<Stream>(i);
  throw ParseError("unknown stream '" + s + "'");
}

std::int64_t Scenario::total_ticks() const { return std::llround(duration * tick_hz); }

Scenario load_scenario(const Json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ParseError("$: scenario must be an object");
  Scenario s;
  Json norm = doc;
  ObjectReader r(doc, "$");
  const auto version = r.integer("version");
  if (version != kScenarioVersion) throw ParseError("$.version: unsupported scenario version " + std::to_string(version));
  s.name = r.string("name", "scenario");

  Json scene_doc;
  if (r.has("scene") && r.has("scene_file")) throw ParseError("$: give either scene or scene_file");
  if (r.has("scene")) {
    scene_doc = r.raw("scene");
  } else {
    const std::string file = r.string("scene_file");
    scene_doc = read_json_file((std::filesystem::path(base_dir) / file).string());
    norm.erase("scene_file");
  }
  if (const Json* tags = r.raw_optional("tags")) {
    if (!tags->is_array()) throw ParseError("$.tags: expected array");
    if (!scene_doc.contains("tags")) scene_doc["tags"] = Json::array();
    for (const auto& t : *tags) scene_doc["tags"].push_back(t);
    norm.erase("tags");
  }
  norm["scene"] = scene_doc;
  s.scene = world::load_scene(scene_doc);

  const Json* robot_doc = r.raw_optional("robot");
  if (!robot_doc && scene_doc.contains("robot")) robot_doc = &scene_doc["robot"];
  s.robot = robot::load_robot_geometry(robot_doc);
  s.flippers_locked = r.boolean("flippers_locked", false);

  if (r.has("initial_pose")) {
    ObjectReader p = r.object("initial_pose");
    s.initial_pose = {p.number("x"), p.number("y"), wrap_angle(p.number("heading", 0.0))};
    p.finish();
  } else {
    s.initial_pose = {0.5 * s.scene.footprint.x(), 0.5 * s.scene.footprint.y(), 0.0};
  }
  if (!s.scene.in_footprint(s.initial_pose.position()))
    throw ValidationError("$.initial_pose: outside the scene footprint");
  if (r.has("initial_flippers")) {
    const auto f = r.numbers("initial_flippers");
    if (f.size() != 4) throw ParseError("$.initial_flippers: expected 4 numbers");
    for (std::size_t i = 0; i < 4; ++i) {
      if (f[i] < s.robot.flipper_min || f[i] > s.robot.flipper_max)
        throw ValidationError("$.initial_flippers: angle outside flipper limits");
      s.initial_flippers[i] = f[i];
    }
  }

  if (r.has("seed")) {
    const Json& sj = r.raw("seed");
    if (!sj.is_number_unsigned() && !(sj.is_number_integer() && sj.get<std::int64_t>() >= 0))
      throw ParseError("$.seed: expected non-negative integer");
    s.seed = sj.get<std::uint64_t>();
  }
  norm["seed"] = s.seed;
  s.duration = r.number("duration");
  if (!(s.duration > 0.0) || s.duration > 3600.0) throw ValidationError("$.duration: must be in (0, 3600] s");
  s.tick_hz = static_cast<int>(r.integer("tick_hz", 50));
  if (s.tick_hz < 10 || s.tick_hz > 1000) throw ValidationError("$.tick_hz: must be in [10, 1000]");

  if (r.has("watchdog")) {
    ObjectReader w = r.object("watchdog");
    s.watchdog_enabled = w.boolean("enabled", s.watchdog_enabled);
    s.watchdog_ms = static_cast<int>(w.integer("timeout_ms", s.watchdog_ms));
    w.finish();
    if (s.watchdog_ms <= 0) throw ValidationError("$.watchdog.timeout_ms: must be positive");
  }

  s.sensing.streams = {Stream::front_color, Stream::front_depth, Stream::rear_color, Stream::rear_depth,
                       Stream::arm_thermal};
  if (r.has("sensing")) {
    ObjectReader c = r.object("sensing");
    auto& sc = s.sensing;
    sc.frame_stride = static_cast<int>(c.integer("frame_stride", sc.frame_stride));
    if (c.has("streams")) {
      sc.streams.clear();
      const Json& a = c.raw("streams");
      if (!a.is_array()) throw ParseError("$.sensing.streams: expected array");
      for (const auto& e : a) {
        if (!e.is_string()) throw ParseError("$.sensing.streams: expected strings");
        const Stream st = stream_from_string(e.get<std::string>());
        for (Stream x : sc.streams)
          if (x == st) throw ValidationError("$.sensing.streams: duplicate stream");
        sc.streams.push_back(st);
      }
      std::sort(sc.streams.begin(), sc.streams.end());
    }
    sc.mapping = c.boolean("mapping", sc.mapping);
    sc.depth_noise = c.number("depth_noise", sc.depth_noise);
    sc.thermal_noise = c.number("thermal_noise", sc.thermal_noise);
    sc.voxel_size = c.number("voxel_size", sc.voxel_size);
    sc.map_pixel_stride = static_cast<int>(c.integer("map_pixel_stride", sc.map_pixel_stride));
    sc.thermal_voxel = c.number("thermal_voxel", sc.thermal_voxel);
    c.finish();
    if (sc.frame_stride < 1) throw ValidationError("$.sensing.frame_stride: must be >= 1");
    if (sc.depth_noise < 0.0 || sc.thermal_noise < 0.0) throw ValidationError("$.sensing: noise must be >= 0");
    if (!(sc.voxel_size > 0.0) || !(sc.thermal_voxel > 0.0)) throw ValidationError("$.sensing: voxel sizes must be positive");
    if (sc.map_pixel_stride < 1) throw ValidationError("$.sensing.map_pixel_stride: must be >= 1");
  }

  if (r.has("odometry")) {
    ObjectReader o = r.object("odometry");
    s.odometry.sigma_pos = o.number("sigma_pos", 0.0);
    s.odometry.sigma_heading = o.number("sigma_heading", 0.0);
    s.odometry.bias = o.number("bias", 0.0);
    o.finish();
    if (s.odometry.sigma_pos < 0.0 || s.odometry.sigma_heading < 0.0)
      throw ValidationError("$.odometry: sigmas must be >= 0");
  }
  if (r.has("fiducials")) {
    ObjectReader f = r.object("fiducials");
    s.fiducials.enabled = f.boolean("enabled", true);
    s.fiducials.every_ticks = static_cast<int>(f.integer("every_ticks", s.fiducials.every_ticks));
    s.fiducials.sigma_pos = f.number("sigma_pos", s.fiducials.sigma_pos);
    s.fiducials.sigma_rot = f.number("sigma_rot", s.fiducials.sigma_rot);
    f.finish();
    if (s.fiducials.every_ticks < 1) throw ValidationError("$.fiducials.every_ticks: must be >= 1");
    if (s.fiducials.sigma_pos < 0.0 || s.fiducials.sigma_rot < 0.0)
      throw ValidationError("$.fiducials: sigmas must be >= 0");
  }

  s.roi.ambient = s.scene.ambient_attic_temp;
  if (r.has("perception")) {
    ObjectReader p = r.object("perception");
    s.roi.gradient_threshold = p.number("gradient_threshold", s.roi.gradient_threshold);
    s.roi.cluster_radius = p.number("cluster_radius", s.roi.cluster_radius);
    s.roi.min_points = static_cast<int>(p.integer("min_points", s.roi.min_points));
    s.roi.ambient = p.number("ambient", s.roi.ambient);
    p.finish();
    if (!(s.roi.gradient_threshold > 0.0) || !(s.roi.cluster_radius > 0.0) || s.roi.min_points < 1)
      throw ValidationError("$.perception: thresholds must be positive");
  }
  if (r.has("seal")) {
    ObjectReader p = r.object("seal");
    s.seal.bead_width = p.number("bead_width", s.seal.bead_width);
    s.seal.standoff = p.number("standoff", s.seal.standoff);
    s.seal.speed = p.number("speed", s.seal.speed);
    p.finish();
    if (!(s.seal.bead_width > 0.0) || !(s.seal.standoff > 0.0) || !(s.seal.speed > 0.0))
      throw ValidationError("$.seal: options must be positive");
  }
  if (r.has("goal")) {
    ObjectReader g = r.object("goal");
    s.goal = Goal{{g.number("x"), g.number("y")}, g.number("tolerance", 0.1)};
    g.finish();
  }

  if (const Json* script = r.raw_optional("script")) {
    if (!script->is_array()) throw ParseError("$.script: expected array");
    double last = 0.0;
    for (std::size_t i = 0; i < script->size(); ++i) {
      const std::string path = "$.script[" + std::to_string(i) + "]";
      ObjectReader e((*script)[i], path);
      ScriptEntry entry;
      entry.t = e.number("t");
      const std::string type = e.string("type");
      const Json empty = Json::object();
      const Json* data = e.raw_optional("data");
      try {
        entry.command = parse_command(type, data ? *data : empty);
      } catch (const ParseError& err) {
        throw ParseError(path + ": " + err.what());
      }
      e.finish();
      if (entry.t < last || entry.t > s.duration) throw ValidationError(path + ".t: times must be non-decreasing and within the duration");
      last = entry.t;
      if (const auto* rs = std::get_if<RequestSeal>(&entry.command)) {
        if (rs->roi_id.rfind("leak:", 0) == 0 && !s.scene.find_leak(rs->roi_id.substr(5)))
          throw ValidationError(path + ": unknown ROI label '" + rs->roi_id + "'");
      }
      s.script.push_back(std::move(entry));
    }
  }
  r.finish();
  s.document = std::move(norm);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  const Json doc = read_json_file(path);
  return load_scenario(doc, std::filesystem::path(path).parent_path().string());
}

Scenario with_seed(const Scenario& s, std::uint64_t seed) {
  Scenario out = s;
  out.seed = seed;
  out.document["seed"] = seed;
  return out;
}

}  // namespace paris::sim
