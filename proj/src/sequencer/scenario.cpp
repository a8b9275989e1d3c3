#include "mcao/sequencer/scenario.hpp"

#include <sstream>

#include <fmt/format.h>

#include "mcao/core/errors.hpp"
#include "mcao/salsa/feeds.hpp"

namespace mcao::seq {

namespace {

bool is_tier(std::string_view s) { return s == "IR_BORESIGHT" || s == "IR" || s == "ALLSKY" || s == "RADAR"; }

ScenarioEvent parse_event(std::string record, TimeNs t, int line_no) {
  if (record.rfind("*,", 0) == 0) record = fmt::format("{:.9f}", ns_to_seconds(t)) + record.substr(1);
  const auto f = salsa::split_fields(record);
  if (f[0] == "window") {
    if (f.size() != 3) throw ParseError("window needs start,end", line_no);
    return salsa::parse_window_record(record.substr(record.find(',') + 1), line_no);
  }
  if (f[0] == "fault" || f[0] == "silence") {
    if (f.size() != 2 || f[1].empty()) throw ParseError(std::string(f[0]) + " needs one id", line_no);
    if (f[0] == "fault") return DeviceFault{std::string(f[1])};
    return FeedSilence{std::string(f[1])};
  }
  if (f.size() >= 2 && is_tier(f[1])) return salsa::parse_aircraft_record(record, line_no);
  if (f.size() == 5) return salsa::parse_pointing_record(record, line_no);
  throw ParseError("unrecognized event record", line_no);
}

}  // namespace

std::vector<ScenarioLine> parse_scenario(std::string_view text) {
  std::vector<ScenarioLine> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int n = 0;
  TimeNs last = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    std::istringstream ls(raw);
    std::string ts, kind;
    if (!(ls >> ts)) continue;
    ScenarioLine line;
    line.line_no = n;
    try {
      line.t = parse_timestamp(ts);
    } catch (const ParseError&) {
      throw ParseError("bad time '" + ts + "'", n);
    }
    if (line.t < 0) throw ParseError("negative time", n);
    if (line.t < last) throw ParseError("time goes backwards", n);
    last = line.t;
    if (!(ls >> kind)) throw ParseError("expected CMD or EVT", n);
    if (kind == "CMD") {
      std::string verb;
      if (!(ls >> verb)) throw ParseError("missing verb", n);
      const auto v = parse_verb(verb);
      if (!v) throw ParseError("unknown verb '" + verb + "'", n);
      line.verb = *v;
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ParseError("parameter '" + kv + "' is not key=value", n);
        line.params[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    } else if (kind == "EVT") {
      std::string rest;
      std::getline(ls, rest);
      const auto b = rest.find_first_not_of(" \t");
      if (b == std::string::npos) throw ParseError("missing event record", n);
      line.is_command = false;
      line.event = parse_event(rest.substr(b), line.t, n);
    } else {
      throw ParseError("expected CMD or EVT, got '" + kind + "'", n);
    }
    out.push_back(std::move(line));
  }
  return out;
}

ScenarioResult run_scenario(Sequencer& seq, const std::vector<ScenarioLine>& script, double settle_s) {
  for (const auto& line : script) {
    seq.advance_to(line.t);
    if (line.is_command) {
      seq.submit(line.verb, line.params);
      continue;
    }
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, salsa::AircraftEvent>)
            seq.post_aircraft(e);
          else if constexpr (std::is_same_v<T, salsa::PointingRecord>)
            seq.post_pointing(e);
          else if constexpr (std::is_same_v<T, salsa::ClosureWindow>)
            seq.add_window(e);
          else if constexpr (std::is_same_v<T, DeviceFault>)
            seq.inject_device_fault(e.device_id);
          else
            seq.silence_feed(e.scope_id);
        },
        line.event);
  }
  if (!script.empty()) seq.advance_to(script.back().t + seconds_to_ns(settle_s));
  ScenarioResult r;
  for (const auto& e : seq.log()) r.log.push_back(format_log(e));
  r.final_state = seq.state();
  r.shutter = seq.shutter();
  return r;
}

}  // namespace mcao::seq
