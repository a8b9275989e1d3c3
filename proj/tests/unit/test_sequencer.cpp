#include <doctest.h>

#include <random>

#include "mcao/core/errors.hpp"
#include "mcao/sequencer/bus.hpp"
#include "mcao/sequencer/interlock.hpp"
#include "mcao/sequencer/scenario.hpp"
#include "mcao/sequencer/sequencer.hpp"
#include "oracles/interlock_table.hpp"
#include "scenarios.hpp"

using namespace mcao;
using namespace mcao::seq;
using salsa::Shutter;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

void settle(Sequencer& s, double seconds) { s.advance_to(s.now() + seconds_to_ns(seconds)); }

void drive_to(Sequencer& s, SystemState target) {
  if (target == SystemState::Parked) return;
  REQUIRE(s.submit(Verb::Init).accepted);
  settle(s, 2);
  if (target == SystemState::Fault) {
    s.inject_device_fault("aom.dc.03");
    settle(s, 0.2);
  }
  if (target == SystemState::Initialized || target == SystemState::Fault) return;
  REQUIRE(s.submit(Verb::Config).accepted);
  settle(s, 1);
  if (target == SystemState::Configured) return;
  REQUIRE(s.submit(Verb::Propagate).accepted);
  settle(s, 0.5);
  if (target == SystemState::LaserPropagating) return;
  REQUIRE(s.submit(Verb::CloseLoops).accepted);
  settle(s, 1);
}

constexpr SystemState kStates[] = {SystemState::Parked,           SystemState::Initialized, SystemState::Configured,
                                   SystemState::LaserPropagating, SystemState::LoopsClosed, SystemState::Fault};

// Legal submission states per verb, written out independently of the implementation.
bool legal(Verb v, SystemState s) {
  using S = SystemState;
  switch (v) {
    case Verb::Init: return s == S::Parked || s == S::Fault;
    case Verb::Datum:
    case Verb::Config: return s == S::Initialized || s == S::Configured;
    case Verb::Park: return s == S::Initialized || s == S::Configured || s == S::Fault;
    case Verb::Propagate: return s == S::Configured;
    case Verb::StopPropagate: return s == S::LaserPropagating || s == S::LoopsClosed;
    case Verb::CloseLoops: return s == S::LaserPropagating;
    case Verb::OpenLoops: return s == S::LoopsClosed;
    case Verb::Abort:
    case Verb::RearmSafety: return true;
  }
  return false;
}

}  // namespace

TEST_CASE("bus: no replay, pattern delivery, bounded queues") {
  TelemetryBus bus;
  bus.publish("x", "salsa.shutter", 0, 1.0);
  auto all = bus.subscribe("*");
  auto salsa_only = bus.subscribe("salsa.*");
  CHECK(all->pending() == 0);

  bus.publish("salsa", "salsa.shutter", 1, std::string("CLOSED"));
  bus.publish("rtc", "rtc.loop", 2, std::vector<double>{1, 2});
  const auto a = all->drain();
  REQUIRE(a.size() == 2);
  CHECK(a[0].seq == 2);
  CHECK(a[1].seq == 1);
  const auto s = salsa_only->drain();
  REQUIRE(s.size() == 1);
  CHECK(s[0].channel == "salsa.shutter");
  CHECK(format_tlm(a[1]) == "TLM 1 rtc rtc.loop 1970-01-01T00:00:00.000000002Z [1,2]");

  auto slow = bus.subscribe("dev", 16);
  for (int i = 0; i < 32; ++i) bus.publish("d", "dev", i, double(i));
  const auto got = slow->drain();
  REQUIRE(got.size() == 16);
  CHECK(got.front().seq == 17);
  CHECK(got.back().seq == 32);
  CHECK(slow->dropped() == 16);
  CHECK(all->pending() == 32);

  bus.unsubscribe(all);
  bus.publish("d", "dev", 99, 0.0);
  CHECK(all->pending() == 32);
  salsa_only.reset();
  bus.publish("d", "dev", 100, 0.0);
  CHECK(slow->drain().size() == 2);
}

TEST_CASE("interlock: CLOSE_LOOPS gate table") {
  for (const auto& row : oracle::kCloseLoopsGate) {
    const Readiness r{row.rtc, row.aom, row.bto, true};
    const auto st = row.in_state ? SystemState::LaserPropagating : SystemState::Configured;
    const auto g = interlock_gate(Verb::CloseLoops, st, r, row.shutter_open ? Shutter::Open : Shutter::Closed);
    CHECK(g.allow == row.allow);
    CHECK(join(g.reasons) == row.reasons);
  }
}

TEST_CASE("interlock: PROPAGATE gate table") {
  for (const auto& row : oracle::kPropagateGate) {
    const Readiness r{true, true, true, row.laser};
    const auto st = row.in_state ? SystemState::Configured : SystemState::Initialized;
    const auto g = interlock_gate(Verb::Propagate, st, r, row.shutter_open ? Shutter::Open : Shutter::Closed);
    CHECK(g.allow == row.allow);
    CHECK(join(g.reasons) == row.reasons);
  }
}

TEST_CASE("interlock: verb legality and transitions against the hand-written tables") {
  for (auto st : kStates)
    for (int v = 0; v <= static_cast<int>(Verb::RearmSafety); ++v)
      CHECK_MESSAGE(verb_allowed_from(static_cast<Verb>(v), st) == legal(static_cast<Verb>(v), st),
                    to_string(static_cast<Verb>(v)) << " from " << to_string(st));
  for (auto a : kStates)
    for (auto b : kStates)
      CHECK_MESSAGE(transition_allowed(a, b) == testutil::allowed_transitions().count({to_string(a), to_string(b)}),
                    to_string(a) << " -> " << to_string(b));
  CHECK(parse_verb("STOP_PROPAGATE") == Verb::StopPropagate);
  CHECK_FALSE(parse_verb("LAUNCH"));
  CHECK(parse_state("LOOPS_CLOSED") == SystemState::LoopsClosed);
}

TEST_CASE("sequencer: illegal verbs are rejected with invalid state") {
  for (auto st : kStates) {
    TelemetryBus bus;
    auto s = testutil::default_sequencer(bus);
    drive_to(s, st);
    REQUIRE(s.state() == st);
    REQUIRE_FALSE(s.busy());
    for (int v = 0; v <= static_cast<int>(Verb::RearmSafety); ++v) {
      const auto verb = static_cast<Verb>(v);
      if (legal(verb, st)) continue;
      const auto r = s.submit(verb);
      CHECK_FALSE(r.accepted);
      CHECK_MESSAGE(r.reason.rfind("invalid state", 0) == 0, to_string(verb) << " from " << to_string(st));
      CHECK(s.command(r.id).state == CommandState::Error);
      CHECK(s.state() == st);
      CHECK(format_log(s.log().back()).find(std::string(to_string(verb)) + " ERROR invalid state") !=
            std::string::npos);
    }
  }
}

TEST_CASE("sequencer: single command in flight, completion order") {
  TelemetryBus bus;
  auto s = testutil::default_sequencer(bus);
  std::vector<std::string> cars;
  s.on_command_update = [&](const CommandRecord& c) { cars.push_back(std::string(to_string(c.state))); };
  const auto init = s.submit(Verb::Init);
  REQUIRE(init.accepted);
  const auto second = s.submit(Verb::Datum);
  CHECK_FALSE(second.accepted);
  CHECK(second.reason == "command in progress");
  settle(s, 2);
  CHECK(s.command(init.id).state == CommandState::Completed);
  CHECK(s.state() == SystemState::Initialized);
  CHECK(cars == std::vector<std::string>{"COMPLETED"});
  const auto dev = s.submit(Verb::Datum, {{"device", "nope"}});
  settle(s, 0.2);
  CHECK(s.command(dev.id).state == CommandState::Error);
}

TEST_CASE("scenario: IR detection with the loops closed") {
  TelemetryBus bus;
  auto s = testutil::default_sequencer(bus);
  const auto r = run_scenario(s, parse_scenario(testutil::kIrScenario));
  CHECK(r.final_state == SystemState::Configured);
  CHECK(r.shutter == Shutter::Closed);
  const auto closed_loops = testutil::find_line(r.log, "STATE LASER_PROPAGATING -> LOOPS_CLOSED");
  const auto shutter = testutil::find_line(r.log, "SALSA shutter CLOSED ir_detection", closed_loops);
  const auto opened = testutil::find_line(r.log, "LOOPS opened", closed_loops);
  const auto back = testutil::find_line(r.log, "STATE LOOPS_CLOSED -> CONFIGURED", closed_loops);
  REQUIRE(closed_loops < r.log.size());
  REQUIRE(shutter < r.log.size());
  REQUIRE(opened < r.log.size());
  REQUIRE(back < r.log.size());
  CHECK(shutter < opened);
  CHECK(opened < back);
  CHECK(r.log[shutter].rfind("8.000 ", 0) == 0);
  CHECK(r.log[opened].rfind("8.000 ", 0) == 0);
}

TEST_CASE("scenario: empty and nominal scripts") {
  TelemetryBus bus;
  auto s = testutil::default_sequencer(bus);
  const auto empty = run_scenario(s, parse_scenario("# nothing\n\n"));
  CHECK(empty.final_state == SystemState::Parked);
  CHECK(empty.log.empty());

  TelemetryBus bus2;
  auto n = testutil::default_sequencer(bus2);
  const auto r = run_scenario(n, parse_scenario(testutil::kNominalScenario));
  CHECK(r.final_state == SystemState::LoopsClosed);
  CHECK(r.shutter == Shutter::Open);
  CHECK(n.readiness().rtc);
}

TEST_CASE("scenario: parse errors carry line numbers") {
  auto line_of = [](const char* text) {
    try {
      parse_scenario(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("0 CMD INIT\n1 CMD LAUNCH\n") == 2);
  CHECK(line_of("2 CMD INIT\n1 CMD PARK\n") == 2);
  CHECK(line_of("0 EVT nonsense\n") == 1);
  CHECK(line_of("x CMD INIT\n") == 1);
  CHECK(line_of("0 CMD CONFIG id\n") == 1);
  const auto ok = parse_scenario("1.5 EVT window,2,3\n1.5 EVT fault,aom.dc.01\n2 EVT *,scope_a,10,40,0.1\n");
  REQUIRE(ok.size() == 3);
  CHECK(std::get<salsa::PointingRecord>(ok[2].event).timestamp == 2 * kNsPerSecond);
}

TEST_CASE("sequencer: safety closes and vetoes until a clean rearm") {
  TelemetryBus bus;
  auto s = testutil::default_sequencer(bus);
  drive_to(s, SystemState::LoopsClosed);
  REQUIRE(s.state() == SystemState::LoopsClosed);
  const TimeNs t0 = s.now();
  s.add_window({t0 + kNsPerSecond, t0 + 3 * kNsPerSecond});
  settle(s, 1.05);
  CHECK(s.shutter() == Shutter::Closed);
  CHECK(s.state() == SystemState::Configured);

  auto r = s.submit(Verb::Propagate);
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == "safety veto");
  r = s.submit(Verb::RearmSafety);
  CHECK(r.accepted);
  CHECK(s.command(r.id).state == CommandState::Error);
  CHECK(s.shutter() == Shutter::Closed);

  settle(s, 2.5);
  r = s.submit(Verb::RearmSafety);
  CHECK(s.command(r.id).state == CommandState::Completed);
  CHECK(s.shutter() == Shutter::Open);
  CHECK(s.submit(Verb::Propagate).accepted);
  settle(s, 0.2);
  CHECK(s.state() == SystemState::LaserPropagating);

  // A silent feed goes stale and drops propagation.
  s.silence_feed("scope_b");
  settle(s, 5.2);
  CHECK(s.shutter() == Shutter::Closed);
  CHECK(s.state() == SystemState::Configured);
  CHECK(s.safety().state().latched.feed_stale);
}

TEST_CASE("sequencer: device fault and shutdown") {
  TelemetryBus bus;
  auto s = testutil::default_sequencer(bus);
  drive_to(s, SystemState::LaserPropagating);
  s.inject_device_fault("bto.servo.07");
  settle(s, 0.2);
  CHECK(s.state() == SystemState::Fault);
  CHECK(s.shutdown() == std::vector<std::string>{"PARK COMPLETED", "SHUTTER CLOSED"});
  CHECK(s.state() == SystemState::Parked);

  TelemetryBus bus2;
  auto t = testutil::default_sequencer(bus2);
  drive_to(t, SystemState::LoopsClosed);
  const auto steps = t.shutdown();
  CHECK(steps == std::vector<std::string>{"OPEN_LOOPS COMPLETED", "STOP_PROPAGATE COMPLETED", "PARK COMPLETED",
                                          "SHUTTER CLOSED"});
  CHECK(t.state() == SystemState::Parked);
}

TEST_CASE("sequencer: randomized lifecycles never stick, leave the table, or beat safety") {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u(0, 1);
  long supremacy = 0, stuck = 0, bad_transitions = 0, transitions = 0, submissions = 0;
  std::set<std::string> visited;
  for (int run = 0; run < 60; ++run) {
    TelemetryBus bus;
    auto s = testutil::default_sequencer(bus);
    auto check = [&] {
      const bool propagating = s.state() == SystemState::LaserPropagating || s.state() == SystemState::LoopsClosed;
      if (propagating && s.shutter() != Shutter::Open) ++supremacy;
      for (const auto& c : s.commands())
        if ((c.state == CommandState::Busy || c.state == CommandState::Accepted) &&
            s.now() - c.submitted > seconds_to_ns(31))
          ++stuck;
    };
    for (int op = 0; op < 80; ++op) {
      const double x = u(g);
      if (x < 0.6) {
        // Half the time, the verb that moves the bring-up forward.
        Verb v = static_cast<Verb>(static_cast<int>(u(g) * 10));
        if (u(g) < 0.5) {
          switch (s.state()) {
            case SystemState::Parked:
            case SystemState::Fault: v = Verb::Init; break;
            case SystemState::Initialized: v = Verb::Config; break;
            case SystemState::Configured: v = Verb::Propagate; break;
            case SystemState::LaserPropagating: v = Verb::CloseLoops; break;
            case SystemState::LoopsClosed: break;
          }
          if (s.shutter() == Shutter::Closed && u(g) < 0.5) v = Verb::RearmSafety;
        }
        s.submit(v);
        ++submissions;
      } else if (x < 0.65) {
        s.post_aircraft(salsa::AircraftEvent{salsa::AircraftTier::IrBoresight, s.now()});
      } else if (x < 0.68) {
        const auto& devs = s.devices().devices();
        s.inject_device_fault(devs[static_cast<std::size_t>(u(g) * devs.size())].id);
      } else if (x < 0.72) {
        s.add_window({s.now() + seconds_to_ns(u(g)), s.now() + seconds_to_ns(1 + u(g) * 2)});
      } else if (x < 0.75) {
        s.silence_feed("scope_a");
      } else if (x < 0.8) {
        s.post_pointing({s.now() + 1, "scope_a", 90, 45, 0.1});
      }
      check();
      settle(s, u(g) * 3);
      check();
      visited.insert(to_string(s.state()));
    }
    settle(s, 40);
    check();
    if (s.busy()) ++stuck;
    for (const auto& [a, b] : testutil::state_changes(s.log())) {
      ++transitions;
      if (!testutil::allowed_transitions().count({a, b})) ++bad_transitions;
    }
  }
  MESSAGE("submissions " << submissions << " transitions " << transitions << " states visited " << visited.size());
  CHECK(supremacy == 0);
  CHECK(stuck == 0);
  CHECK(bad_transitions == 0);
  CHECK(transitions > 200);
  CHECK(visited.size() == 6);
}
