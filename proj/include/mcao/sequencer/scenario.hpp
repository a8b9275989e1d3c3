#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mcao/sequencer/sequencer.hpp"

namespace mcao::seq {

struct DeviceFault {
  std::string device_id;
};
struct FeedSilence {
  std::string scope_id;
};
using ScenarioEvent =
    std::variant<salsa::AircraftEvent, salsa::PointingRecord, salsa::ClosureWindow, DeviceFault, FeedSilence>;

struct ScenarioLine {
  int line_no = 0;
  TimeNs t = 0;
  bool is_command = true;
  Verb verb = Verb::Init;
  std::map<std::string, std::string> params;
  ScenarioEvent event;
};

// Lines: "<t_seconds> CMD <verb> [key=value ...]" or "<t_seconds> EVT <record>".
// EVT records are an aircraft record, a pointing record, "window,<start>,<end>",
// "fault,<device_id>" or "silence,<scope_id>". A timestamp field of "*" takes the
// line's time. Blank lines and '#' comments are skipped; times must not decrease.
std::vector<ScenarioLine> parse_scenario(std::string_view text);

struct ScenarioResult {
  std::vector<std::string> log;
  SystemState final_state = SystemState::Parked;
  salsa::Shutter shutter = salsa::Shutter::Open;
};

// Replays the script on the simulation clock, then lets the system settle.
ScenarioResult run_scenario(Sequencer& seq, const std::vector<ScenarioLine>& script, double settle_s = 2.0);

}  // namespace mcao::seq
