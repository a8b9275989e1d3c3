#pragma once

// Scripted sequencer runs shared by the unit suite and the acceptance run.

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mcao/sequencer/scenario.hpp"

namespace testutil {

// Full bring-up, then an IR boresight detection with the loops closed.
inline constexpr const char* kIrScenario = R"(# bring-up
0.0 CMD INIT
2.0 CMD CONFIG id=night
3.0 CMD PROPAGATE
5.0 CMD CLOSE_LOOPS
8.0 EVT *,IR_BORESIGHT
)";

inline constexpr const char* kNominalScenario = R"(0.0 CMD INIT
2.0 CMD CONFIG
3.0 CMD PROPAGATE
5.0 CMD CLOSE_LOOPS
)";

inline mcao::seq::Sequencer default_sequencer(mcao::seq::TelemetryBus& bus) {
  return mcao::seq::Sequencer(mcao::seq::SequencerOptions::defaults(), mcao::salsa::SalsaConfig::defaults(),
                              mcao::devices::InventoryConfig::defaults(), bus);
}

inline std::size_t find_line(const std::vector<std::string>& log, const std::string& needle, std::size_t from = 0) {
  for (std::size_t i = from; i < log.size(); ++i)
    if (log[i].find(needle) != std::string::npos) return i;
  return log.size();
}

// Every state change the machine may make, written out by hand.
inline const std::set<std::pair<std::string, std::string>>& allowed_transitions() {
  static const std::set<std::pair<std::string, std::string>> pairs{
      {"PARKED", "INITIALIZED"},
      {"FAULT", "INITIALIZED"},
      {"INITIALIZED", "CONFIGURED"},
      {"INITIALIZED", "PARKED"},
      {"CONFIGURED", "PARKED"},
      {"FAULT", "PARKED"},
      {"CONFIGURED", "LASER_PROPAGATING"},
      {"LASER_PROPAGATING", "LOOPS_CLOSED"},
      {"LOOPS_CLOSED", "LASER_PROPAGATING"},
      {"LASER_PROPAGATING", "CONFIGURED"},
      {"LOOPS_CLOSED", "CONFIGURED"},
      {"PARKED", "FAULT"},
      {"INITIALIZED", "FAULT"},
      {"CONFIGURED", "FAULT"},
      {"LASER_PROPAGATING", "FAULT"},
      {"LOOPS_CLOSED", "FAULT"},
  };
  return pairs;
}

// Parses "STATE A -> B" log entries.
inline std::vector<std::pair<std::string, std::string>> state_changes(const std::vector<mcao::seq::LogEntry>& log) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : log) {
    if (e.source != "STATE") continue;
    const auto arrow = e.text.find(" -> ");
    out.emplace_back(e.text.substr(0, arrow), e.text.substr(arrow + 4));
  }
  return out;
}

}  // namespace testutil
