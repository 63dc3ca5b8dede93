#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "paris/sim/scenario.hpp"

namespace paris::teleop {

struct ServerConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;
  int tick_hz = 50;
  bool watchdog_enabled = true;
  int watchdog_ms = 500;
  int max_pending_frames = 4;  ///< per connection; older frames are dropped beyond this
  int map_snapshot_every = 50; ///< ticks between map snapshots for map-feed sessions
  std::size_t map_snapshot_points = 20000;
  std::string replay_path;     ///< replay log written while serving; empty for none
};

/// Splits "host:port". Throws ValidationError.
std::pair<std::string, unsigned short> parse_listen(const std::string& s);

/// Defaults, then the JSON config file (if any), then PARIS_LISTEN,
/// PARIS_TICK_HZ and PARIS_WATCHDOG_MS.
ServerConfig load_server_config(const std::optional<std::string>& path);

/// Scenario with the server's tick rate and watchdog written into its document.
sim::Scenario apply_server_config(const sim::Scenario& scenario, const ServerConfig& config);

/// Real-time teleop server: HTTP endpoints and the /ws protocol on one
/// io_context thread; the simulation steps on a fixed timer.
class Server {
 public:
  Server(const sim::Scenario& scenario, const ServerConfig& config);
  ~Server();

  /// Binds the listener; throws RuntimeError on bind failure. Returns the bound port.
  unsigned short bind();
  /// Serves until stop() or SIGINT/SIGTERM (when handle_signals); then
  /// closes the replay log.
  void run(bool handle_signals = true);
  /// Safe to call from any thread.
  void stop();

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace paris::teleop
