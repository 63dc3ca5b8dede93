#include "paris/sim/command.hpp"

namespace paris::sim {
namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

}  // namespace

const char* to_string(Mode m) { return m == Mode::drive ? "drive" : "arm"; }

Mode mode_from_string(const std::string& s) {
  if (s == "drive") return Mode::drive;
  if (s == "arm") return Mode::arm;
  throw ParseError("unknown mode '" + s + "'");
}

const char* command_type(const Command& c) {
  return std::visit(Overload{[](const Drive&) { return "drive"; },
                             [](const Flipper&) { return "flipper"; },
                             [](const ArmJog&) { return "arm_jog"; },
                             [](const ArmGoto&) { return "arm_goto"; },
                             [](const Trigger&) { return "trigger"; },
                             [](const ModeToggle&) { return "mode_toggle"; },
                             [](const RequestSeal&) { return "request_seal"; },
                             [](const SwapCanister&) { return "swap_canister"; },
                             [](const EStop&) { return "estop"; },
                             [](const Heartbeat&) { return "heartbeat"; },
                             [](const Inspect&) { return "inspect"; },
                             [](const SelectFeed&) { return "select_feed"; }},
                    c);
}

Command parse_command(const std::string& type, const Json& data) {
  if (!data.is_object()) throw ParseError("$.data: expected object");
  ObjectReader r(data, "$.data");
  Command c;
  if (type == "drive") {
    c = Drive{r.number("v"), r.number("w")};
  } else if (type == "flipper") {
    c = Flipper{static_cast<int>(r.integer("index")), r.number("rate")};
  } else if (type == "arm_jog") {
    c = ArmJog{static_cast<int>(r.integer("joint")), r.number("delta")};
  } else if (type == "arm_goto") {
    ArmGoto g;
    g.position = r.vec3("position");
    g.approach = r.vec3("approach", g.approach);
    const std::string frame = r.string("frame", "base");
    if (frame != "base" && frame != "map") throw ParseError("$.data.frame: expected base or map");
    g.map_frame = frame == "map";
    c = g;
  } else if (type == "trigger") {
    if (!r.has("on")) throw ParseError("$.data.on: missing");
    c = Trigger{r.boolean("on", false)};
  } else if (type == "mode_toggle") {
    c = ModeToggle{mode_from_string(r.string("mode"))};
  } else if (type == "request_seal") {
    c = RequestSeal{r.string("roi_id")};
  } else if (type == "swap_canister") {
    c = SwapCanister{};
  } else if (type == "estop") {
    c = EStop{};
  } else if (type == "heartbeat") {
    c = Heartbeat{};
  } else if (type == "inspect") {
    c = Inspect{};
  } else if (type == "select_feed") {
    const std::string f = r.string("feed");
    if (f != "rgb" && f != "thermal" && f != "map") throw ParseError("$.data.feed: expected rgb, thermal or map");
    c = SelectFeed{f};
  } else {
    throw ParseError("$.type: unknown command type '" + type + "'");
  }
  r.finish();
  return c;
}

Json command_data(const Command& c) {
  return std::visit(
      Overload{[](const Drive& d) { return Json{{"v", d.v}, {"w", d.w}}; },
               [](const Flipper& f) { return Json{{"index", f.index}, {"rate", f.rate}}; },
               [](const ArmJog& a) { return Json{{"joint", a.joint}, {"delta", a.delta}}; },
               [](const ArmGoto& g) {
                 return Json{{"position", vec_json(g.position)},
                             {"approach", vec_json(g.approach)},
                             {"frame", g.map_frame ? "map" : "base"}};
               },
               [](const Trigger& t) { return Json{{"on", t.on}}; },
               [](const ModeToggle& m) { return Json{{"mode", to_string(m.mode)}}; },
               [](const RequestSeal& s) { return Json{{"roi_id", s.roi_id}}; },
               [](const SelectFeed& f) { return Json{{"feed", f.feed}}; },
               [](const auto&) { return Json::object(); }},
      c);
}

bool is_control(const Command& c) {
  return !std::holds_alternative<Heartbeat>(c) && !std::holds_alternative<SelectFeed>(c);
}

}  // namespace paris::sim
