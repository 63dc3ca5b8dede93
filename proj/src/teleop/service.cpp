#include "paris/teleop/service.hpp"

#include <cmath>

#include "paris/common/error.hpp"
#include "paris/common/hash.hpp"

namespace paris::teleop {

const char* to_string(Role r) { return r == Role::driver ? "driver" : "observer"; }

Json TickRecord::to_json() const {
  return {{"type", "tick"}, {"tick", tick},     {"t_ms", t_ms},
          {"commands", commands}, {"events", events}, {"hash", hex64(hash)}};
}

std::uint64_t record_hash(std::uint64_t state_hash, const Json& commands, const Json& events) {
  Fnv1a h;
  h.u64(state_hash);
  h.str(commands.dump());
  h.str(events.dump());
  return h.value();
}

TeleopService::TeleopService(sim::Simulator& sim, ServiceConfig config) : sim_(sim), cfg_(config) {
  projected_mode_ = sim_.mode();
}

std::int64_t TeleopService::now_ms() const { return std::llround(sim_.time() * 1000.0); }

int TeleopService::open_session(bool want_driver) {
  Session s;
  s.id = next_id_++;
  s.role = (want_driver && !driver()) ? Role::driver : Role::observer;
  s.last_heartbeat_ms = now_ms();
  if (s.role == Role::driver) last_driver_ms_ = now_ms();
  sessions_[s.id] = s;
  pending_.commands.push_back({{"session", s.id}, {"op", "open"}, {"want_driver", want_driver}});
  reply(s.id, {{"type", "session"}, {"id", s.id}, {"role", to_string(s.role)}});
  return s.id;
}

void TeleopService::close_session(int id) {
  if (!sessions_.erase(id)) return;
  pending_.commands.push_back({{"session", id}, {"op", "close"}});
}

const Session* TeleopService::session(int id) const {
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : &it->second;
}

std::optional<int> TeleopService::driver() const {
  for (const auto& [id, s] : sessions_)
    if (s.role == Role::driver) return id;
  return std::nullopt;
}

void TeleopService::reply(int session, Json msg) {
  msg["session"] = session;
  pending_.events.push_back(msg);
  outbox_.push_back({session, std::move(msg)});
}

void TeleopService::error(int session, const Json& seq, const std::string& code, const std::string& message) {
  reply(session, {{"type", "error"}, {"seq", seq}, {"code", code}, {"message", message}});
}

void TeleopService::handle_message(int sid, const std::string& text) {
  const auto it = sessions_.find(sid);
  if (it == sessions_.end()) return;
  Session& s = it->second;
  pending_.commands.push_back({{"session", sid}, {"text", text}});

  Json env;
  try {
    env = Json::parse(text);
  } catch (const Json::parse_error&) {
    error(sid, nullptr, "malformed", "message is not valid JSON");
    return;
  }
  if (!env.is_object() || !env.contains("seq") || !env["seq"].is_number_integer()) {
    error(sid, nullptr, "malformed", "envelope needs an integer seq");
    return;
  }
  const std::int64_t seq = env["seq"].get<std::int64_t>();
  if (s.last_seq && seq <= *s.last_seq) {
    error(sid, seq, "out_of_order", "seq " + std::to_string(seq) + " after " + std::to_string(*s.last_seq));
    return;
  }
  s.last_seq = seq;

  sim::Command cmd;
  try {
    for (const auto& [k, v] : env.items())
      if (k != "seq" && k != "type" && k != "data" && k != "sent_at") throw ParseError("$." + k + ": unknown key");
    if (!env.contains("type") || !env["type"].is_string()) throw ParseError("$.type: expected string");
    if (env.contains("sent_at") && !env["sent_at"].is_number()) throw ParseError("$.sent_at: expected number");
    cmd = sim::parse_command(env["type"].get<std::string>(), env.contains("data") ? env["data"] : Json::object());
  } catch (const ParseError& e) {
    error(sid, seq, "malformed", e.what());
    return;
  }

  if (const auto* f = std::get_if<sim::SelectFeed>(&cmd)) {
    s.selected_feed = f->feed;
    reply(sid, {{"type", "ack"}, {"seq", seq}});
    return;
  }
  const bool is_driver = s.role == Role::driver;
  if (std::holds_alternative<sim::Heartbeat>(cmd)) {
    s.last_heartbeat_ms = now_ms();
    if (is_driver) last_driver_ms_ = now_ms();
    reply(sid, {{"type", "ack"}, {"seq", seq}});
    return;
  }
  if (!is_driver) {
    error(sid, seq, "not_driver", "observer sessions cannot send control commands");
    return;
  }
  if (std::holds_alternative<sim::EStop>(cmd)) {
    last_driver_ms_ = now_ms();
    const std::size_t dropped = queue_.size();
    queue_.clear();
    seal_pending_ = false;
    projected_mode_ = sim_.mode();
    sim::Events ev;
    sim_.halt("estop", ev);
    for (auto& e : ev) {
      pending_.events.push_back(e);
      outbox_.push_back({0, e});
    }
    reply(sid, {{"type", "ack"}, {"seq", seq}, {"dropped", dropped}});
    return;
  }
  if (const auto e = sim_.validate(cmd, projected_mode_, seal_pending_)) {
    error(sid, seq, e->code, e->message);
    return;
  }
  if (const auto* m = std::get_if<sim::ModeToggle>(&cmd)) projected_mode_ = m->mode;
  if (std::holds_alternative<sim::RequestSeal>(cmd)) seal_pending_ = true;
  last_driver_ms_ = now_ms();
  sim_.set_watchdog_hold(false);
  queue_.push_back({seq, std::move(cmd)});
  reply(sid, {{"type", "ack"}, {"seq", seq}});
}

TickRecord TeleopService::tick() {
  sim::Events ev;
  while (!queue_.empty()) {
    Queued q = std::move(queue_.front());
    queue_.pop_front();
    if (const auto e = sim_.validate(q.command, sim_.mode(), false)) {
      ev.push_back({{"type", "dropped"}, {"seq", q.seq}, {"code", e->code}});
      continue;
    }
    sim_.apply(q.command, ev);
  }
  seal_pending_ = false;
  projected_mode_ = sim_.mode();

  if (cfg_.watchdog_enabled && sim_.moving() && now_ms() - last_driver_ms_ >= cfg_.watchdog_ms) {
    sim_.halt("watchdog", ev);
    sim_.set_watchdog_hold(true);
  }
  sim_.step(ev);

  for (auto& e : ev) {
    pending_.events.push_back(e);
    outbox_.push_back({0, e});
  }
  const int every = std::max(1, sim_.scenario().tick_hz / cfg_.telemetry_hz);
  if (sim_.tick() % every == 0) outbox_.push_back({0, sim_.telemetry()});

  TickRecord rec = std::move(pending_);
  pending_ = TickRecord{};
  rec.tick = sim_.tick();
  rec.t_ms = now_ms();
  rec.hash = record_hash(sim_.state_hash(), rec.commands, rec.events);
  return rec;
}

std::vector<Outgoing> TeleopService::drain_outbox() {
  std::vector<Outgoing> out;
  out.swap(outbox_);
  return out;
}

}  // namespace paris::teleop
