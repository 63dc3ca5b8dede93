#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paris/sim/simulator.hpp"

namespace paris::teleop {

enum class Role { driver, observer };
const char* to_string(Role r);

struct Session {
  int id = 0;
  Role role = Role::observer;
  std::optional<std::int64_t> last_seq;
  std::int64_t last_heartbeat_ms = 0;
  std::string selected_feed = "rgb";
};

/// Message for one session, or for every session when `session` is 0.
struct Outgoing {
  int session = 0;
  Json message;
};

/// Everything that entered and left the simulation during one tick.
struct TickRecord {
  std::int64_t tick = 0;
  std::int64_t t_ms = 0;
  Json commands = Json::array();  ///< session lifecycle and raw messages, in arrival order
  Json events = Json::array();    ///< acks, errors and simulation events
  std::uint64_t hash = 0;

  Json to_json() const;
};

struct ServiceConfig {
  bool watchdog_enabled = true;
  int watchdog_ms = 500;
  int telemetry_hz = 10;
};

/// Session layer in front of the simulator: ordering, role and mode
/// gating, acking, the command queue and the safety watchdog. Everything
/// runs on the caller's thread; the server serialises access.
class TeleopService {
 public:
  TeleopService(sim::Simulator& sim, ServiceConfig config);

  /// Opens a session; it becomes the driver when no driver is connected
  /// and `want_driver` is set, otherwise an observer.
  int open_session(bool want_driver = true);
  void close_session(int id);
  const Session* session(int id) const;
  std::optional<int> driver() const;

  /// Handles one text message. Exactly one ack or error is queued for the
  /// sender. Unknown sessions are ignored.
  void handle_message(int session, const std::string& text);

  /// Applies the queue, runs the watchdog, steps the simulation and closes
  /// the current record.
  TickRecord tick();

  std::vector<Outgoing> drain_outbox();
  sim::Simulator& simulator() { return sim_; }
  const sim::Simulator& simulator() const { return sim_; }
  const ServiceConfig& config() const { return cfg_; }
  std::int64_t now_ms() const;

 private:
  void reply(int session, Json msg);
  void error(int session, const Json& seq, const std::string& code, const std::string& message);

  sim::Simulator& sim_;
  ServiceConfig cfg_;
  std::map<int, Session> sessions_;
  int next_id_ = 1;
  struct Queued {
    std::int64_t seq;
    sim::Command command;
  };
  std::deque<Queued> queue_;
  sim::Mode projected_mode_ = sim::Mode::drive;
  bool seal_pending_ = false;
  std::int64_t last_driver_ms_ = 0;
  TickRecord pending_;
  std::vector<Outgoing> outbox_;
};

/// Tick-record hash: state hash chained with the record's commands and events.
std::uint64_t record_hash(std::uint64_t state_hash, const Json& commands, const Json& events);

}  // namespace paris::teleop
