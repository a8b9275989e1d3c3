#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcao/salsa/safety.hpp"

namespace mcao::seq {

enum class SystemState { Parked, Initialized, Configured, LaserPropagating, LoopsClosed, Fault };
enum class Verb { Init, Datum, Park, Config, Propagate, StopPropagate, CloseLoops, OpenLoops, Abort, RearmSafety };

const char* to_string(SystemState s);
const char* to_string(Verb v);
std::optional<Verb> parse_verb(std::string_view s);
std::optional<SystemState> parse_state(std::string_view s);

struct Readiness {
  bool rtc = false;
  bool aom = false;
  bool bto = false;
  bool laser = false;
};

struct GateResult {
  bool allow = true;
  std::vector<std::string> reasons;
};

// Pure predicate over the requested verb, the current state, subsystem
// readiness and the shutter. Every failed condition contributes a reason.
GateResult interlock_gate(Verb verb, SystemState state, const Readiness& ready, salsa::Shutter shutter);

// States a verb may be submitted from, and the state a successful command ends in
// (nullopt: state unchanged).
bool verb_allowed_from(Verb verb, SystemState state);
std::optional<SystemState> verb_target(Verb verb, SystemState from);

// Every (from, to) pair the state machine may produce, command-driven or
// safety/fault-driven.
bool transition_allowed(SystemState from, SystemState to);

}  // namespace mcao::seq
