#include "mcao/sequencer/interlock.hpp"

namespace mcao::seq {

using S = SystemState;

const char* to_string(SystemState s) {
  switch (s) {
    case S::Parked: return "PARKED";
    case S::Initialized: return "INITIALIZED";
    case S::Configured: return "CONFIGURED";
    case S::LaserPropagating: return "LASER_PROPAGATING";
    case S::LoopsClosed: return "LOOPS_CLOSED";
    case S::Fault: return "FAULT";
  }
  return "?";
}

const char* to_string(Verb v) {
  switch (v) {
    case Verb::Init: return "INIT";
    case Verb::Datum: return "DATUM";
    case Verb::Park: return "PARK";
    case Verb::Config: return "CONFIG";
    case Verb::Propagate: return "PROPAGATE";
    case Verb::StopPropagate: return "STOP_PROPAGATE";
    case Verb::CloseLoops: return "CLOSE_LOOPS";
    case Verb::OpenLoops: return "OPEN_LOOPS";
    case Verb::Abort: return "ABORT";
    case Verb::RearmSafety: return "REARM_SAFETY";
  }
  return "?";
}

std::optional<Verb> parse_verb(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Verb::RearmSafety); ++i)
    if (s == to_string(static_cast<Verb>(i))) return static_cast<Verb>(i);
  return std::nullopt;
}

std::optional<SystemState> parse_state(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(S::Fault); ++i)
    if (s == to_string(static_cast<S>(i))) return static_cast<S>(i);
  return std::nullopt;
}

bool verb_allowed_from(Verb verb, SystemState st) {
  switch (verb) {
    case Verb::Init: return st == S::Parked || st == S::Fault;
    case Verb::Datum:
    case Verb::Config: return st == S::Initialized || st == S::Configured;
    case Verb::Park: return st == S::Initialized || st == S::Configured || st == S::Fault;
    case Verb::Propagate: return st == S::Configured;
    case Verb::StopPropagate: return st == S::LaserPropagating || st == S::LoopsClosed;
    case Verb::CloseLoops: return st == S::LaserPropagating;
    case Verb::OpenLoops: return st == S::LoopsClosed;
    case Verb::Abort:
    case Verb::RearmSafety: return true;
  }
  return false;
}

std::optional<SystemState> verb_target(Verb verb, SystemState from) {
  switch (verb) {
    case Verb::Init: return S::Initialized;
    case Verb::Config: return S::Configured;
    case Verb::Park: return S::Parked;
    case Verb::Propagate: return S::LaserPropagating;
    case Verb::StopPropagate: return S::Configured;
    case Verb::CloseLoops: return S::LoopsClosed;
    case Verb::OpenLoops: return S::LaserPropagating;
    case Verb::Abort:
      if (from == S::LaserPropagating || from == S::LoopsClosed) return S::Configured;
      return std::nullopt;
    case Verb::Datum:
    case Verb::RearmSafety: return std::nullopt;
  }
  return std::nullopt;
}

bool transition_allowed(SystemState from, SystemState to) {
  if (from == to) return false;
  if (to == S::Fault) return true;
  // Safety drops and aborts land in CONFIGURED.
  if (to == S::Configured && (from == S::LaserPropagating || from == S::LoopsClosed)) return true;
  for (int v = 0; v <= static_cast<int>(Verb::RearmSafety); ++v) {
    const auto verb = static_cast<Verb>(v);
    if (verb_allowed_from(verb, from) && verb_target(verb, from) == to) return true;
  }
  return false;
}

GateResult interlock_gate(Verb verb, SystemState state, const Readiness& ready, salsa::Shutter shutter) {
  GateResult g;
  auto deny = [&](bool ok, const char* reason) {
    if (!ok) {
      g.allow = false;
      g.reasons.emplace_back(reason);
    }
  };
  deny(verb_allowed_from(verb, state), "invalid state");
  const bool open = shutter == salsa::Shutter::Open;
  switch (verb) {
    case Verb::CloseLoops:
      deny(open, "safety veto");
      deny(ready.rtc, "RTC not ready");
      deny(ready.aom, "AOM not ready");
      deny(ready.bto, "BTO not ready");
      break;
    case Verb::Propagate:
      deny(open, "safety veto");
      deny(ready.laser, "laser not ready");
      break;
    default:
      break;
  }
  return g;
}

}  // namespace mcao::seq
