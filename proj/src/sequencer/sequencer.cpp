#include "mcao/sequencer/sequencer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mcao/core/config.hpp"
#include "mcao/core/errors.hpp"

namespace mcao::seq {

using devices::ControllerId;
using devices::DeviceState;
using devices::DeviceVerb;
using S = SystemState;

namespace {

constexpr double kCommandTimeoutS = 30.0;

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

}  // namespace

const char* to_string(CommandState s) {
  switch (s) {
    case CommandState::Accepted: return "ACCEPTED";
    case CommandState::Busy: return "BUSY";
    case CommandState::Completed: return "COMPLETED";
    case CommandState::Error: return "ERROR";
  }
  return "?";
}

std::string format_log(const LogEntry& e) {
  return fmt::format("{:.3f} {} {}", ns_to_seconds(e.t), e.source, e.text);
}

SequencerOptions SequencerOptions::defaults() {
  SequencerOptions o;
  o.pointing = {{"lgs", {0.0, 60.0, 0.05}}, {"scope_a", {90.0, 45.0, 0.1}}, {"scope_b", {270.0, 50.0, 0.1}}};
  return o;
}

SequencerOptions SequencerOptions::from_config(const Config& cfg) {
  SequencerOptions o = defaults();
  o.cycle_hz = cfg.get_double("sequencer.cycle_hz", o.cycle_hz);
  o.rtc_init_s = cfg.get_double("sequencer.rtc_init_s", o.rtc_init_s);
  o.rtc_config_s = cfg.get_double("sequencer.rtc_config_s", o.rtc_config_s);
  o.laser_warmup_s = cfg.get_double("sequencer.laser_warmup_s", o.laser_warmup_s);
  o.close_loops_s = cfg.get_double("sequencer.close_loops_s", o.close_loops_s);
  o.offload_amplitude = cfg.get_double("sequencer.offload_amplitude", o.offload_amplitude);
  o.offload_period_s = cfg.get_double("sequencer.offload_period_s", o.offload_period_s);
  const auto keys = cfg.keys_with_prefix("salsa.pointing.");
  if (!keys.empty()) o.pointing.clear();
  for (const auto& k : keys) {
    const auto v = cfg.get_doubles(k, {});
    if (v.size() != 3) throw ConfigError(k + " needs az,el,fov");
    o.pointing[k.substr(15)] = {v[0], v[1], v[2]};
  }
  if (!(o.cycle_hz > 0) || o.rtc_init_s < 0 || o.rtc_config_s < 0 || o.laser_warmup_s < 0 || o.close_loops_s < 0 ||
      !(o.offload_period_s > 0))
    throw ConfigError("invalid sequencer timing");
  if (devices::DeviceSystem::kTickNs > o.cycle_ns() || o.cycle_ns() % devices::DeviceSystem::kTickNs != 0)
    throw ConfigError("sequencer.cycle_hz must divide 800 Hz");
  return o;
}

Sequencer::Sequencer(SequencerOptions opt, salsa::SalsaConfig salsa_cfg, devices::InventoryConfig inv,
                     TelemetryBus& bus)
    : opt_(std::move(opt)), bus_(bus), safety_(std::move(salsa_cfg)), devices_(std::move(inv)), feed_(opt_.pointing) {
  const auto cyc = opt_.cycle_ns();
  if (cyc % devices::DeviceSystem::kTickNs != 0) throw ConfigError("sequencer cycle must be a multiple of 1.25 ms");
  if (safety_.config().cadence_ns() % cyc != 0 && cyc % safety_.config().cadence_ns() != 0)
    throw ConfigError("safety cadence and sequencer cycle must nest");
  safety_.on_change = [this](const salsa::HazardState& h, TimeNs t) { on_shutter(h, t); };
  devices_.on_status = [this](TimeNs t, const devices::Device& d) {
    bus_.publish("devices", "devices." + d.id, t, fmt::format("{} {:.6g}", to_string(d.state), d.position));
  };
  feed_tick(0);
  safety_.step(0);
}

Sequencer Sequencer::from_config(const Config& cfg, TelemetryBus& bus) {
  return Sequencer(SequencerOptions::from_config(cfg), salsa::SalsaConfig::from_config(cfg),
                   devices::InventoryConfig::from_config(cfg), bus);
}

void Sequencer::log(TimeNs t, std::string source, std::string text) {
  log_.push_back({t, std::move(source), std::move(text)});
}

Readiness Sequencer::readiness() const {
  Readiness r;
  r.rtc = rtc_ready_at_ && rtc_configured_at_ && now_ >= *rtc_ready_at_ && now_ >= *rtc_configured_at_;
  r.aom = devices_.controller_initialized(ControllerId::Aom);
  r.bto = devices_.controller_initialized(ControllerId::BtoLlt);
  r.laser = laser_ready_at_ && now_ >= *laser_ready_at_;
  return r;
}

Sequencer::SubmitResult Sequencer::submit(Verb verb, std::map<std::string, std::string> params) {
  CommandRecord c;
  c.id = commands_.size() + 1;
  c.verb = verb;
  c.params = std::move(params);
  c.submitted = now_;
  SubmitResult r{c.id, false, {}};

  auto reject = [&](std::string reason) {
    c.state = CommandState::Error;
    c.detail = reason;
    log(now_, "CMD", fmt::format("{} {} ERROR {}", c.id, to_string(verb), reason));
    commands_.push_back(c);
    r.reason = std::move(reason);
    return r;
  };

  const bool immediate = verb == Verb::Abort || verb == Verb::RearmSafety;
  if (inflight_ && !immediate) return reject("command in progress");
  const auto gate = interlock_gate(verb, state_, readiness(), shutter());
  if (!gate.allow) return reject(join(gate.reasons, ", "));

  r.accepted = true;
  log(now_, "CMD", fmt::format("{} {} ACCEPTED", c.id, to_string(verb)));
  commands_.push_back(c);
  if (!immediate) {
    inflight_ = c.id;
    return r;
  }

  auto& rec = commands_.back();
  rec.state = CommandState::Busy;
  log(now_, "CMD", fmt::format("{} {} BUSY", rec.id, to_string(verb)));
  if (verb == Verb::Abort) {
    if (inflight_) finish(commands_[*inflight_ - 1], CommandState::Error, "aborted", now_);
    if (rtc_loop_closed_) open_loops(now_);
    if (laser_on_) laser_off(now_);
    if (state_ == S::LaserPropagating || state_ == S::LoopsClosed) set_state(S::Configured, now_);
    safety_.operator_abort(now_);
    finish(commands_[rec.id - 1], CommandState::Completed, "", now_);
  } else {
    const auto rr = safety_.rearm(now_);
    if (rr.accepted)
      finish(rec, CommandState::Completed, "", now_);
    else
      finish(rec, CommandState::Error, "rearm rejected: " + join(rr.state.causes, ","), now_);
  }
  return r;
}

void Sequencer::finish(CommandRecord& c, CommandState s, const std::string& detail, TimeNs t) {
  c.state = s;
  c.detail = detail;
  log(t, "CMD", fmt::format("{} {} {}{}{}", c.id, to_string(c.verb), to_string(s), detail.empty() ? "" : " ", detail));
  bus_.publish("sequencer", "sequencer.command", t,
               fmt::format("{} {} {}{}{}", c.id, to_string(c.verb), to_string(s), detail.empty() ? "" : " ", detail));
  if (inflight_ == c.id) inflight_.reset();
  if (on_command_update) on_command_update(c);
}

void Sequencer::set_state(SystemState s, TimeNs t) {
  if (s == state_) return;
  log(t, "STATE", fmt::format("{} -> {}", to_string(state_), to_string(s)));
  state_ = s;
  bus_.publish("sequencer", "sequencer.state", t, std::string(to_string(s)));
}

void Sequencer::open_loops(TimeNs t) {
  rtc_loop_closed_ = false;
  devices_.set_loops_closed(false);
  log(t, "LOOPS", "opened");
  bus_.publish("rtc", "rtc.loop", t, std::string("OPEN"));
}

void Sequencer::close_loops(TimeNs t) {
  rtc_loop_closed_ = true;
  devices_.set_loops_closed(true);
  log(t, "LOOPS", "closing");
  bus_.publish("rtc", "rtc.loop", t, std::string("CLOSED"));
}

void Sequencer::laser_off(TimeNs t) {
  laser_on_ = false;
  log(t, "LASER", "off");
  bus_.publish("laser", "laser.propagating", t, 0.0);
}

void Sequencer::on_shutter(const salsa::HazardState& h, TimeNs t) {
  const std::string causes = join(h.causes, ",");
  log(t, "SALSA", fmt::format("shutter {}{}{}", to_string(h.shutter), causes.empty() ? "" : " ", causes));
  bus_.publish("salsa", "salsa.shutter", t, fmt::format("{} {}", to_string(h.shutter), causes.empty() ? "-" : causes));
  if (h.shutter == salsa::Shutter::Closed) safety_drop(t, "safety veto");
}

void Sequencer::safety_drop(TimeNs t, const std::string& reason) {
  if (inflight_) {
    auto& c = commands_[*inflight_ - 1];
    if (c.verb == Verb::Propagate || c.verb == Verb::CloseLoops) finish(c, CommandState::Error, reason, t);
  }
  if (rtc_loop_closed_) open_loops(t);
  if (laser_on_) laser_off(t);
  if (state_ == S::LaserPropagating || state_ == S::LoopsClosed) set_state(S::Configured, t);
}

void Sequencer::post_aircraft(const salsa::AircraftEvent& e) { safety_.post_event(e); }

void Sequencer::post_pointing(const salsa::PointingRecord& r) {
  feed_[r.scope_id] = {r.az_deg, r.el_deg, r.fov_deg};
  feed_silent_[r.scope_id] = false;
  safety_.ingest_pointing(r);
}

void Sequencer::silence_feed(const std::string& scope_id) { feed_silent_[scope_id] = true; }

void Sequencer::add_window(const salsa::ClosureWindow& w) {
  windows_.push_back(w);
  safety_.set_windows(windows_);
}

void Sequencer::inject_device_fault(const std::string& id) { devices::inject_fault(devices_.device(id)); }

void Sequencer::feed_tick(TimeNs t) {
  for (const auto& [scope, p] : feed_) {
    if (feed_silent_[scope]) continue;
    salsa::PointingRecord r;
    r.timestamp = t;
    r.scope_id = scope;
    r.az_deg = p[0];
    r.el_deg = p[1];
    r.fov_deg = p[2];
    safety_.ingest_pointing(r);
  }
}

void Sequencer::advance_to(TimeNs t) {
  constexpr TimeNs tick = devices::DeviceSystem::kTickNs;
  const TimeNs cyc = opt_.cycle_ns(), safety_cyc = safety_.config().cadence_ns();
  for (TimeNs k = now_ / tick + 1; k * tick <= t; ++k) {
    const TimeNs tt = k * tick;
    now_ = tt;
    if (rtc_loop_closed_) {
      const double ph = 2.0 * M_PI * ns_to_seconds(tt) / opt_.offload_period_s;
      devices_.push_offload(opt_.offload_amplitude * std::sin(ph), opt_.offload_amplitude * std::cos(ph));
    }
    devices_.advance_to(tt);
    if (tt % safety_cyc == 0) {
      feed_tick(tt);
      safety_.step(tt);
      const auto& w = safety_.warnings();
      for (; warnings_seen_ < w.size(); ++warnings_seen_) {
        const auto& x = w[warnings_seen_];
        if (x.action == salsa::AircraftAction::Shutter) continue;  // logged with the shutter change
        log(tt, "SALSA", fmt::format("{} {}", salsa::to_string(x.tier), salsa::to_string(x.action)));
        bus_.publish("salsa", "salsa.warning", tt,
                     fmt::format("{} {}", salsa::to_string(x.tier), salsa::to_string(x.action)));
      }
    }
    if (tt % cyc == 0) cycle(tt);
  }
  if (t > now_) now_ = t;
}

void Sequencer::cycle(TimeNs t) {
  for (const auto& d : devices_.devices())
    if (d.state == DeviceState::Fault && state_ != S::Fault) {
      log(t, "DEVICE", d.id + " FAULT");
      if (inflight_) finish(commands_[*inflight_ - 1], CommandState::Error, "fault: " + d.id, t);
      if (rtc_loop_closed_) open_loops(t);
      if (laser_on_) laser_off(t);
      set_state(S::Fault, t);
      break;
    }
  if (shutter() == salsa::Shutter::Closed) safety_drop(t, "safety veto");

  if (!inflight_) return;
  auto& c = commands_[*inflight_ - 1];
  if (c.state == CommandState::Accepted) {
    start_command(c, t);
    if (!inflight_) return;
  }
  if (command_done(c, t)) {
    const auto target = verb_target(c.verb, state_);
    if (c.verb == Verb::Park) {
      laser_ready_at_.reset();
      rtc_ready_at_.reset();
      rtc_configured_at_.reset();
      config_id_.clear();
    }
    if (target) set_state(*target, t);
    finish(c, CommandState::Completed, "", t);
  } else if (t - busy_since_ > seconds_to_ns(kCommandTimeoutS)) {
    finish(c, CommandState::Error, "timeout", t);
  }
}

void Sequencer::start_command(CommandRecord& c, TimeNs t) {
  c.state = CommandState::Busy;
  busy_since_ = t;
  log(t, "CMD", fmt::format("{} {} BUSY", c.id, to_string(c.verb)));
  if (!verb_allowed_from(c.verb, state_)) return finish(c, CommandState::Error, "invalid state", t);

  switch (c.verb) {
    case Verb::Init:
      for (auto& d : devices_.devices()) {
        devices_.command(d.id, DeviceVerb::Reset);
        devices_.command(d.id, DeviceVerb::Init);
      }
      rtc_ready_at_ = t + seconds_to_ns(opt_.rtc_init_s);
      laser_ready_at_ = t + seconds_to_ns(opt_.laser_warmup_s);
      break;
    case Verb::Datum:
      if (auto it = c.params.find("device"); it != c.params.end()) {
        const auto ack = devices_.command(it->second, DeviceVerb::Datum);
        if (!ack.accepted) return finish(c, CommandState::Error, ack.detail, t);
      } else {
        for (const auto& d : devices_.devices()) devices_.command(d.id, DeviceVerb::Datum);
      }
      break;
    case Verb::Config: {
      auto it = c.params.find("id");
      config_id_ = it == c.params.end() ? "default" : it->second;
      rtc_configured_at_ = t + seconds_to_ns(opt_.rtc_config_s);
      break;
    }
    case Verb::Park:
      if (rtc_loop_closed_) open_loops(t);
      if (laser_on_) laser_off(t);
      for (const auto& d : devices_.devices()) {
        devices_.command(d.id, DeviceVerb::Reset);
        devices_.command(d.id, DeviceVerb::Datum);
      }
      break;
    case Verb::Propagate:
    case Verb::CloseLoops: {
      const auto g = interlock_gate(c.verb, state_, readiness(), shutter());
      if (!g.allow) return finish(c, CommandState::Error, join(g.reasons, ", "), t);
      if (c.verb == Verb::Propagate) {
        laser_on_ = true;
        log(t, "LASER", "on");
        bus_.publish("laser", "laser.propagating", t, 1.0);
      } else {
        close_loops(t);
      }
      break;
    }
    case Verb::StopPropagate:
      if (rtc_loop_closed_) open_loops(t);
      if (laser_on_) laser_off(t);
      break;
    case Verb::OpenLoops:
      open_loops(t);
      break;
    case Verb::Abort:
    case Verb::RearmSafety:
      break;
  }
}

bool Sequencer::command_done(const CommandRecord& c, TimeNs t) {
  auto none_moving = [&] {
    for (const auto& d : devices_.devices())
      if (d.state == DeviceState::Moving) return false;
    return true;
  };
  switch (c.verb) {
    case Verb::Init: {
      const auto r = readiness();
      return r.aom && r.bto && r.laser && rtc_ready_at_ && t >= *rtc_ready_at_;
    }
    case Verb::Datum:
    case Verb::Park: return none_moving();
    case Verb::Config: return rtc_configured_at_ && t >= *rtc_configured_at_;
    case Verb::CloseLoops: return t >= busy_since_ + seconds_to_ns(opt_.close_loops_s);
    default: return true;
  }
}

std::vector<std::string> Sequencer::shutdown(TimeNs timeout) {
  std::vector<std::string> steps;
  const TimeNs deadline = now_ + timeout;
  auto run = [&](Verb v) {
    const auto r = submit(v);
    if (!r.accepted) {
      steps.push_back(fmt::format("{} ERROR {}", to_string(v), r.reason));
      return;
    }
    while (command(r.id).state != CommandState::Completed && command(r.id).state != CommandState::Error &&
           now_ < deadline)
      advance_to(now_ + opt_.cycle_ns());
    steps.push_back(fmt::format("{} {}", to_string(v), to_string(command(r.id).state)));
  };
  log(now_, "SHUTDOWN", "begin");
  if (inflight_) finish(commands_[*inflight_ - 1], CommandState::Error, "shutdown", now_);
  if (state_ == S::LoopsClosed) run(Verb::OpenLoops);
  if (state_ == S::LaserPropagating) run(Verb::StopPropagate);
  if (state_ == S::Initialized || state_ == S::Configured || state_ == S::Fault) run(Verb::Park);
  safety_.operator_abort(now_);
  steps.push_back(fmt::format("SHUTTER {}", salsa::to_string(shutter())));
  log(now_, "SHUTDOWN", "complete");
  return steps;
}

}  // namespace mcao::seq
