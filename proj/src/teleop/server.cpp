#include "paris/teleop/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "paris/common/error.hpp"
#include "paris/mission/run.hpp"
#include "paris/sensors/image_io.hpp"
#include "paris/teleop/service.hpp"

namespace paris::teleop {
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::pair<std::string, unsigned short> parse_listen(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ValidationError("listen address must be HOST:PORT, got '" + s + "'");
  const std::string host = s.substr(0, colon);
  const std::string port = s.substr(colon + 1);
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) throw ValidationError("bad port in listen address '" + s + "'");
  return {host, static_cast<unsigned short>(p)};
}

ServerConfig load_server_config(const std::optional<std::string>& path) {
  ServerConfig c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ParseError("cannot open config " + *path);
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ParseError(*path + ": " + e.what());
    }
    ObjectReader r(doc, "$");
    if (r.has("listen")) std::tie(c.host, c.port) = parse_listen(r.string("listen"));
    c.tick_hz = static_cast<int>(r.integer("tick_hz", c.tick_hz));
    c.watchdog_enabled = r.boolean("watchdog_enabled", c.watchdog_enabled);
    c.watchdog_ms = static_cast<int>(r.integer("watchdog_ms", c.watchdog_ms));
    c.max_pending_frames = static_cast<int>(r.integer("max_pending_frames", c.max_pending_frames));
    c.map_snapshot_every = static_cast<int>(r.integer("map_snapshot_every", c.map_snapshot_every));
    c.replay_path = r.string("replay_path", c.replay_path);
    r.finish();
  }
  auto env_int = [](const char* name, int& out) {
    if (const char* v = std::getenv(name)) {
      char* end = nullptr;
      const long x = std::strtol(v, &end, 10);
      if (*v == '\0' || *end != '\0') throw ValidationError(std::string(name) + ": expected an integer");
      out = static_cast<int>(x);
    }
  };
  if (const char* l = std::getenv("PARIS_LISTEN")) std::tie(c.host, c.port) = parse_listen(l);
  env_int("PARIS_TICK_HZ", c.tick_hz);
  env_int("PARIS_WATCHDOG_MS", c.watchdog_ms);
  if (c.tick_hz < 10 || c.tick_hz > 1000) throw ValidationError("tick rate must be in [10, 1000] Hz");
  if (c.watchdog_ms <= 0) throw ValidationError("watchdog timeout must be positive");
  if (c.max_pending_frames < 1 || c.map_snapshot_every < 1) throw ValidationError("frame limits must be positive");
  return c;
}

sim::Scenario apply_server_config(const sim::Scenario& scenario, const ServerConfig& config) {
  Json doc = scenario.document;
  doc["tick_hz"] = config.tick_hz;
  doc["watchdog"] = {{"enabled", config.watchdog_enabled}, {"timeout_ms", config.watchdog_ms}};
  return sim::load_scenario(doc);
}

class WsConn;

struct Server::Impl {
  Impl(const sim::Scenario& s, const ServerConfig& c) : sc(s), cfg(c) {}

  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  net::steady_timer timer{ioc};
  sim::Scenario sc;
  ServerConfig cfg;
  std::unique_ptr<sim::Simulator> sim;
  std::unique_ptr<TeleopService> svc;
  std::ofstream log_file;
  std::unique_ptr<mission::ReplayWriter> writer;
  std::map<int, std::weak_ptr<WsConn>> conns;
  std::chrono::steady_clock::time_point next_tick;
  bool bound = false;
  bool finished = false;

  void start();
  void do_accept();
  void schedule();
  void on_tick();
  void shutdown();
  int open(const std::shared_ptr<WsConn>& c, bool want_driver);
  void close(int sid);
  void message(int sid, const std::string& text);
  void dispatch(std::vector<Outgoing> out);
  void on_frames(const sim::FrameSet& f);
  Json map_snapshot() const;
  http::response<http::string_body> handle_http(const http::request<http::string_body>& req) const;
};

class WsConn : public std::enable_shared_from_this<WsConn> {
 public:
  WsConn(tcp::socket&& s, Server::Impl& srv) : ws_(std::move(s)), srv_(srv) {}

  void start(http::request<http::string_body> req) {
    want_driver_ = std::string(req.target()).find("role=observer") == std::string::npos;
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConn::on_accept, shared_from_this()));
  }

  void send(std::shared_ptr<const std::string> data, bool binary, bool droppable) {
    if (closed_) return;
    if (binary && pending_binary_ >= srv_.cfg.max_pending_frames) return;
    if (droppable && queue_.size() > 64) return;
    queue_.push_back({std::move(data), binary});
    if (binary) ++pending_binary_;
    if (queue_.size() == 1) do_write();
  }

  int session() const { return sid_; }

 private:
  struct Out {
    std::shared_ptr<const std::string> data;
    bool binary;
  };

  void on_accept(beast::error_code ec) {
    if (ec) return;
    sid_ = srv_.open(shared_from_this(), want_driver_);
    do_read();
  }

  void do_read() { ws_.async_read(buf_, beast::bind_front_handler(&WsConn::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      srv_.close(sid_);
      return;
    }
    const std::string text = beast::buffers_to_string(buf_.data());
    buf_.consume(buf_.size());
    if (ws_.got_text()) srv_.message(sid_, text);
    do_read();
  }

  void do_write() {
    const Out& m = queue_.front();
    ws_.binary(m.binary);
    ws_.async_write(net::buffer(*m.data), beast::bind_front_handler(&WsConn::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      queue_.clear();
      return;
    }
    if (queue_.front().binary) --pending_binary_;
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& srv_;
  beast::flat_buffer buf_;
  std::deque<Out> queue_;
  int pending_binary_ = 0;
  int sid_ = 0;
  bool want_driver_ = true;
  bool closed_ = false;
};

class HttpConn : public std::enable_shared_from_this<HttpConn> {
 public:
  HttpConn(tcp::socket&& s, Server::Impl& srv) : stream_(std::move(s)), srv_(srv) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buf_, req_, beast::bind_front_handler(&HttpConn::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_) && std::string(req_.target()).rfind("/ws", 0) == 0) {
      stream_.expires_never();
      std::make_shared<WsConn>(stream_.release_socket(), srv_)->start(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(srv_.handle_http(req_));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
      if (wec) return;
      if (!res->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, wec);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  Server::Impl& srv_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
};

void Server::Impl::start() {
  sim = std::make_unique<sim::Simulator>(sc);
  sim->on_frames = [this](const sim::FrameSet& f) { on_frames(f); };
  svc = std::make_unique<TeleopService>(*sim, ServiceConfig{sc.watchdog_enabled, sc.watchdog_ms, 10});
  if (!cfg.replay_path.empty()) {
    log_file.open(cfg.replay_path, std::ios::binary);
    if (!log_file) throw RuntimeError("cannot write " + cfg.replay_path);
    writer = std::make_unique<mission::ReplayWriter>(&log_file, sc);
  } else {
    writer = std::make_unique<mission::ReplayWriter>(nullptr, sc);
  }
}

void Server::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
    if (ec) return;
    std::make_shared<HttpConn>(std::move(s), *this)->run();
    do_accept();
  });
}

void Server::Impl::schedule() {
  const auto period = std::chrono::nanoseconds(1'000'000'000LL / sc.tick_hz);
  next_tick += period;
  const auto now = std::chrono::steady_clock::now();
  if (next_tick + 5 * period < now) next_tick = now;
  timer.expires_at(next_tick);
  timer.async_wait([this](beast::error_code ec) {
    if (!ec && !finished) on_tick();
  });
}

void Server::Impl::on_tick() {
  const auto rec = svc->tick();
  writer->write(rec);
  dispatch(svc->drain_outbox());
  if (sim->tick() % cfg.map_snapshot_every == 0) {
    std::shared_ptr<const std::string> snap;
    for (auto& [sid, w] : conns) {
      const auto c = w.lock();
      const Session* s = svc->session(sid);
      if (!c || !s || s->selected_feed != "map") continue;
      if (!snap) snap = std::make_shared<const std::string>(map_snapshot().dump());
      c->send(snap, false, true);
    }
  }
  schedule();
}

void Server::Impl::shutdown() {
  if (finished) return;
  finished = true;
  beast::error_code ec;
  acceptor.close(ec);
  timer.cancel();
  writer->finish(sim->tick());
  if (log_file.is_open()) log_file.close();
  ioc.stop();
}

int Server::Impl::open(const std::shared_ptr<WsConn>& c, bool want_driver) {
  const int sid = svc->open_session(want_driver);
  conns[sid] = c;
  dispatch(svc->drain_outbox());
  return sid;
}

void Server::Impl::close(int sid) {
  conns.erase(sid);
  svc->close_session(sid);
}

void Server::Impl::message(int sid, const std::string& text) {
  svc->handle_message(sid, text);
  dispatch(svc->drain_outbox());
}

void Server::Impl::dispatch(std::vector<Outgoing> out) {
  for (auto& o : out) {
    const bool telemetry = o.message.value("type", "") == "telemetry";
    auto data = std::make_shared<const std::string>(o.message.dump());
    if (o.session != 0) {
      const auto it = conns.find(o.session);
      if (it != conns.end())
        if (const auto c = it->second.lock()) c->send(data, false, false);
      continue;
    }
    for (auto& [sid, w] : conns)
      if (const auto c = w.lock()) c->send(data, false, telemetry);
  }
}

namespace {

std::shared_ptr<const std::string> frame_message(sim::Stream stream, double time, int w, int h,
                                                 const sensors::Bytes& png) {
  std::string msg(16, '\0');
  const std::uint32_t fields[4] = {static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(std::llround(time * 1000.0)),
                                   static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h)};
  for (int i = 0; i < 4; ++i)
    for (int b = 0; b < 4; ++b) msg[static_cast<std::size_t>(4 * i + b)] = static_cast<char>((fields[i] >> (8 * b)) & 0xff);
  msg.append(reinterpret_cast<const char*>(png.data()), png.size());
  return std::make_shared<const std::string>(std::move(msg));
}

}  // namespace

void Server::Impl::on_frames(const sim::FrameSet& f) {
  std::shared_ptr<const std::string> rgb, thermal, range;
  for (auto& [sid, w] : conns) {
    const auto c = w.lock();
    const Session* s = svc->session(sid);
    if (!c || !s) continue;
    if (s->selected_feed == "rgb" && f.front_color) {
      if (!rgb)
        rgb = frame_message(sim::Stream::front_color, f.time, f.front_color->width, f.front_color->height,
                            sensors::encode_png_rgb(*f.front_color));
      c->send(rgb, true, true);
    } else if (s->selected_feed == "thermal" && f.arm_thermal) {
      if (!thermal) {
        const auto& t = *f.arm_thermal;
        thermal = frame_message(sim::Stream::arm_thermal, f.time, t.width, t.height,
                                sensors::encode_png_rgb(sensors::thermal_to_rgb(t)));
        const auto [lo, hi] = std::minmax_element(t.data.begin(), t.data.end());
        range = std::make_shared<const std::string>(
            Json{{"type", "thermal_range"}, {"min", *lo}, {"max", *hi}, {"time", f.time}}.dump());
      }
      c->send(range, false, true);
      c->send(thermal, true, true);
    }
  }
}

Json Server::Impl::map_snapshot() const {
  const auto& cells = sim->map().cells();
  const std::size_t stride = std::max<std::size_t>(1, (cells.size() + cfg.map_snapshot_points - 1) / cfg.map_snapshot_points);
  Json pts = Json::array();
  std::size_t i = 0;
  for (const auto& [key, cell] : cells) {
    if (i++ % stride != 0) continue;
    const Vec3 p = sim->map().center_of(key);
    const auto col = cell.color();
    pts.push_back({p.x(), p.y(), p.z(), col[0], col[1], col[2]});
  }
  return {{"type", "map_snapshot"},
          {"time", sim->time()},
          {"voxel_size", sim->map().voxel_size()},
          {"total", cells.size()},
          {"points", pts}};
}

http::response<http::string_body> Server::Impl::handle_http(const http::request<http::string_body>& req) const {
  http::response<http::string_body> res;
  res.version(req.version());
  res.keep_alive(req.keep_alive());
  res.set(http::field::server, "paris");
  res.set(http::field::access_control_allow_origin, "*");
  std::string path(req.target());
  if (const auto q = path.find('?'); q != std::string::npos) path.resize(q);
  auto json = [&](const Json& j) {
    res.result(http::status::ok);
    res.set(http::field::content_type, "application/json");
    res.body() = j.dump();
  };
  if (req.method() != http::verb::get) {
    res.result(http::status::method_not_allowed);
    res.body() = "method not allowed\n";
  } else if (path == "/healthz") {
    json({{"status", "ok"}, {"tick", sim->tick()}, {"time", sim->time()}});
  } else if (path == "/scene") {
    json(world::scene_to_json(sim->scene()));
  } else if (path == "/rois") {
    json(perception::rois_to_json(sim->rois()));
  } else if (path == "/map.ply") {
    std::ostringstream os;
    sim->map().write_ply(os);
    res.result(http::status::ok);
    res.set(http::field::content_type, "application/octet-stream");
    res.body() = os.str();
  } else {
    res.result(http::status::not_found);
    res.set(http::field::content_type, "text/plain");
    res.body() = "not found\n";
  }
  res.prepare_payload();
  return res;
}

Server::Server(const sim::Scenario& scenario, const ServerConfig& config)
    : impl_(std::make_shared<Impl>(apply_server_config(scenario, config), config)) {
  impl_->start();
}

Server::~Server() = default;

unsigned short Server::bind() {
  auto& a = impl_->acceptor;
  beast::error_code ec;
  const auto addr = net::ip::make_address(impl_->cfg.host, ec);
  if (ec) throw RuntimeError("bind failed: bad host '" + impl_->cfg.host + "'");
  const tcp::endpoint ep(addr, impl_->cfg.port);
  a.open(ep.protocol(), ec);
  if (!ec) a.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) a.bind(ep, ec);
  if (!ec) a.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw RuntimeError("bind failed on " + impl_->cfg.host + ":" + std::to_string(impl_->cfg.port) + ": " + ec.message());
  impl_->bound = true;
  return a.local_endpoint().port();
}

void Server::run(bool handle_signals) {
  if (!impl_->bound) bind();
  std::optional<net::signal_set> signals;
  if (handle_signals) {
    signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    signals->async_wait([this](beast::error_code, int) { impl_->shutdown(); });
  }
  impl_->do_accept();
  impl_->next_tick = std::chrono::steady_clock::now();
  impl_->schedule();
  impl_->ioc.run();
  if (!impl_->finished) impl_->shutdown();
}

void Server::stop() {
  net::post(impl_->ioc, [impl = impl_] { impl->shutdown(); });
}

}  // namespace paris::teleop
