#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcao/core/timebase.hpp"
#include "mcao/devices/controller.hpp"
#include "mcao/salsa/safety.hpp"
#include "mcao/sequencer/bus.hpp"
#include "mcao/sequencer/interlock.hpp"

namespace mcao {
class Config;
}

namespace mcao::seq {

enum class CommandState { Accepted, Busy, Completed, Error };
const char* to_string(CommandState s);

struct CommandRecord {
  std::uint64_t id = 0;
  Verb verb = Verb::Init;
  std::map<std::string, std::string> params;
  CommandState state = CommandState::Accepted;
  std::string detail;
  TimeNs submitted = 0;
};

struct LogEntry {
  TimeNs t = 0;
  std::string source;
  std::string text;
};
std::string format_log(const LogEntry& e);

struct SequencerOptions {
  double cycle_hz = 10.0;
  double rtc_init_s = 0.3;
  double rtc_config_s = 0.2;
  double laser_warmup_s = 1.0;
  double close_loops_s = 0.5;
  double offload_amplitude = 0.02;  // synthetic RTC tip offload, arcsec
  double offload_period_s = 5.0;
  // Synthetic pointing feed per scope: az, el, fov half-angle (deg).
  std::map<std::string, std::array<double, 3>> pointing;

  static SequencerOptions defaults();
  static SequencerOptions from_config(const Config& cfg);
  TimeNs cycle_ns() const { return seconds_to_ns(1.0 / cycle_hz); }
};

class Sequencer {
 public:
  Sequencer(SequencerOptions opt, salsa::SalsaConfig salsa_cfg, devices::InventoryConfig inv, TelemetryBus& bus);
  static Sequencer from_config(const Config& cfg, TelemetryBus& bus);

  struct SubmitResult {
    std::uint64_t id = 0;
    bool accepted = false;
    std::string reason;
  };
  SubmitResult submit(Verb verb, std::map<std::string, std::string> params = {});

  // Simulation clock: 800 Hz device ticks, sequencer and safety cycles at their cadence.
  void advance_to(TimeNs t);
  TimeNs now() const { return now_; }

  // SALSA inputs. IR events act at once; others at the next safety step.
  void post_aircraft(const salsa::AircraftEvent& e);
  void post_pointing(const salsa::PointingRecord& r);
  void silence_feed(const std::string& scope_id);
  void add_window(const salsa::ClosureWindow& w);
  void inject_device_fault(const std::string& device_id);

  // Declared shutdown: OPEN_LOOPS, STOP_PROPAGATE, PARK, then the shutter closes.
  std::vector<std::string> shutdown(TimeNs timeout = 60 * kNsPerSecond);

  SystemState state() const { return state_; }
  Readiness readiness() const;
  salsa::Shutter shutter() const { return safety_.state().shutter; }
  const std::string& active_config() const { return config_id_; }
  bool busy() const { return inflight_.has_value(); }

  const std::vector<LogEntry>& log() const { return log_; }
  const std::vector<CommandRecord>& commands() const { return commands_; }
  const CommandRecord& command(std::uint64_t id) const { return commands_.at(id - 1); }

  salsa::SafetyEngine& safety() { return safety_; }
  devices::DeviceSystem& devices() { return devices_; }

  // Fired on every command lifecycle change after submission (CAR messages).
  std::function<void(const CommandRecord&)> on_command_update;

 private:
  void cycle(TimeNs t);
  void start_command(CommandRecord& c, TimeNs t);
  bool command_done(const CommandRecord& c, TimeNs t);
  void finish(CommandRecord& c, CommandState s, const std::string& detail, TimeNs t);
  void set_state(SystemState s, TimeNs t);
  void on_shutter(const salsa::HazardState& h, TimeNs t);
  void safety_drop(TimeNs t, const std::string& reason);
  void open_loops(TimeNs t);
  void close_loops(TimeNs t);
  void laser_off(TimeNs t);
  void feed_tick(TimeNs t);
  void log(TimeNs t, std::string source, std::string text);

  SequencerOptions opt_;
  TelemetryBus& bus_;
  salsa::SafetyEngine safety_;
  devices::DeviceSystem devices_;

  SystemState state_ = SystemState::Parked;
  std::string config_id_;
  std::vector<CommandRecord> commands_;
  std::optional<std::uint64_t> inflight_;
  TimeNs busy_since_ = 0;
  std::vector<LogEntry> log_;
  TimeNs now_ = 0;

  // Laser stub and RTC adapter.
  std::optional<TimeNs> laser_ready_at_;
  bool laser_on_ = false;
  std::optional<TimeNs> rtc_ready_at_;
  std::optional<TimeNs> rtc_configured_at_;
  bool rtc_loop_closed_ = false;

  std::map<std::string, std::array<double, 3>> feed_;
  std::map<std::string, bool> feed_silent_;
  std::vector<salsa::ClosureWindow> windows_;
  std::size_t warnings_seen_ = 0;
};

}  // namespace mcao::seq
