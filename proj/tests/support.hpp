#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "paris/common/json_reader.hpp"
#include "paris/sim/scenario.hpp"
#include "paris/world/scene.hpp"

namespace paris::test {

inline std::string scenario_path(const std::string& name) {
  return std::string(PARIS_SCENARIO_DIR) + "/" + name;
}

/// Joists along x at the given y positions, all spanning the footprint.
inline Json joists_at(const std::vector<double>& ys, double top = 0.14, double length = 1.22) {
  Json out = Json::array();
  for (const double y : ys)
    out.push_back({{"origin", {0.0, y}}, {"direction", {1.0, 0.0}}, {"length", length}, {"width", 0.038},
                   {"top_height", top}});
  return out;
}

inline Json scene_doc(const Json& joists, const Json& leaks = Json::array(), const Json& fixtures = Json::array()) {
  return {{"version", 1},
          {"scene",
           {{"footprint", {1.22, 2.51}},
            {"ambient_attic_temp_k", 290.0},
            {"exterior_temp_k", 273.0},
            {"drywall_level_m", 0.0}}},
          {"joists", joists},
          {"fixtures", fixtures},
          {"leaks", leaks},
          {"hatch", {{"width", 0.57}, {"height", 0.76}, {"position", {0.61, 0.1}}}}};
}

/// Seven joists at 0.38 m spacing, the layout used by most scenarios.
inline std::vector<double> testbed_rows() { return {0.19, 0.57, 0.95, 1.33, 1.71, 2.09, 2.47}; }

inline Json point_leak(const std::string& id, double x, double y, double dt = -10.0, double sigma = 0.02) {
  return {{"id", id},
          {"geometry", {{"type", "point"}, {"center", {x, y, 0.0}}}},
          {"delta_t_k", dt},
          {"sigma_m", sigma}};
}

/// Scenario document: a stationary robot over the testbed rows.
inline Json scenario_doc(const Json& scene, const Json& script = Json::array(), double duration = 1.0) {
  return {{"version", 1},
          {"name", "test"},
          {"scene", scene},
          {"initial_pose", {{"x", 0.61}, {"y", 1.14}, {"heading", kPi / 2.0}}},
          {"seed", 5},
          {"duration", duration},
          {"sensing", {{"streams", Json::array()}, {"mapping", false}}},
          {"script", script}};
}

}  // namespace paris::test
