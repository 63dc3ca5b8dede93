#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "paris/common/json_reader.hpp"
#include "paris/common/rng.hpp"
#include "paris/sim/command.hpp"

namespace paris::test {

inline std::string env(std::int64_t seq, const std::string& type, const Json& data = Json::object()) {
  return Json{{"seq", seq}, {"type", type}, {"data", data}}.dump();
}

// Independent model of the acking rules for the fuzz alphabet below.
struct TeleopModel {
  std::map<int, std::optional<std::int64_t>> last;
  int driver = 0;
  sim::Mode actual = sim::Mode::drive;
  sim::Mode projected = sim::Mode::drive;

  /// Expected reply: "ack" or an error code.
  std::string expect(int sid, const std::string& text) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (...) {
      return "malformed";
    }
    if (!j.is_object() || !j.contains("seq") || !j["seq"].is_number_integer()) return "malformed";
    const auto seq = j["seq"].get<std::int64_t>();
    if (last[sid] && seq <= *last[sid]) return "out_of_order";
    last[sid] = seq;
    const std::string type = j.value("type", "");
    const Json data = j.value("data", Json::object());
    static const std::set<std::string> known = {"drive", "flipper", "trigger", "mode_toggle", "heartbeat",
                                                "select_feed", "estop"};
    if (!known.count(type)) return "malformed";
    if (type == "select_feed" || type == "heartbeat") return "ack";
    if (sid != driver) return "not_driver";
    if (type == "estop") {
      projected = actual;
      return "ack";
    }
    if (type == "mode_toggle") {
      projected = data.at("mode") == "arm" ? sim::Mode::arm : sim::Mode::drive;
      return "ack";
    }
    if (type == "trigger") return projected == sim::Mode::arm ? "ack" : "mode";
    if (projected != sim::Mode::drive) return "mode";
    if (type == "drive") {
      const double v = data.at("v"), w = data.at("w");
      return std::abs(v) <= 0.3 && std::abs(w) <= 1.0 ? "ack" : "limit";
    }
    const int idx = data.at("index");
    const double rate = data.at("rate");
    return idx >= 0 && idx <= 3 && std::abs(rate) <= 0.5 ? "ack" : "limit";
  }
  void tick() { actual = projected; }
};

inline std::string random_message(Rng& rng, std::int64_t& seq) {
  const double r = rng.uniform();
  // seq mostly increases, sometimes repeats or goes back
  const double sr = rng.uniform();
  const std::int64_t s = sr < 0.8 ? ++seq : (sr < 0.9 ? seq : seq - 1 - static_cast<std::int64_t>(rng.uniform(0, 5)));
  if (r < 0.04) return "{\"seq\": ";
  if (r < 0.07) return Json{{"type", "heartbeat"}}.dump();
  if (r < 0.10) return env(s, "teleport");
  if (r < 0.30) return env(s, "drive", {{"v", rng.uniform(-0.4, 0.4)}, {"w", rng.uniform(-1.2, 1.2)}});
  if (r < 0.42)
    return env(s, "flipper", {{"index", static_cast<int>(rng.uniform(-1, 5))}, {"rate", rng.uniform(-0.6, 0.6)}});
  if (r < 0.52) return env(s, "trigger", {{"on", rng.uniform() < 0.5}});
  if (r < 0.64) return env(s, "mode_toggle", {{"mode", rng.uniform() < 0.5 ? "arm" : "drive"}});
  if (r < 0.80) return env(s, "heartbeat");
  if (r < 0.90) return env(s, "select_feed", {{"feed", rng.uniform() < 0.5 ? "rgb" : "thermal"}});
  return env(s, "estop");
}


}  // namespace paris::test
