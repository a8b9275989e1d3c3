#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mcao/core/timebase.hpp"
#include "mcao/devices/inventory.hpp"

namespace mcao::devices {

// Runs the 800 Hz BTO loop on its own state: it sees only offload samples and
// emits target updates, never touching device state directly.
class FastLoopExecutor {
 public:
  explicit FastLoopExecutor(LoopSpec spec, std::size_t queue_depth = 64);

  void push_sample(double v);
  // One tick: consumes the oldest pending sample (or counts a dropout).
  std::optional<std::pair<std::string, double>> tick(bool closed);
  void sync_target(double t) { target_ = t; }

  const LoopSpec& spec() const { return spec_; }
  LoopSpec& spec() { return spec_; }
  const LoopState& state() const { return state_; }
  std::size_t dropped_samples() const { return dropped_; }

 private:
  LoopSpec spec_;
  LoopState state_;
  std::deque<double> samples_;
  std::size_t depth_;
  std::size_t dropped_ = 0;
  double target_ = 0.0;
};

class DeviceSystem {
 public:
  static constexpr TimeNs kTickNs = 1'250'000;  // 800 Hz base tick of the simulation clock

  explicit DeviceSystem(InventoryConfig cfg);

  // Runs every base tick t_k = k * kTickNs with now < t_k <= t.
  void advance_to(TimeNs t);
  TimeNs now() const { return now_; }

  CommandAck command(const std::string& device_id, DeviceVerb verb, double value = 0.0);
  std::vector<CommandAck> command_all(ControllerId c, DeviceVerb verb, double value = 0.0);

  const Device& device(const std::string& id) const;
  Device& device(const std::string& id);
  const std::vector<Device>& devices() const { return devices_; }
  bool controller_ready(ControllerId c) const;
  bool controller_initialized(ControllerId c) const;

  // RTC offload channel feeding the fast BTO loop.
  void push_offload(double x, double y);
  // One-shot sample for a slow-loop sensor channel, used instead of the synthetic value.
  void inject_sample(const std::string& channel, double v);
  // A muted channel produces no samples, so its loop counts dropouts.
  void mute(const std::string& channel, bool muted);

  void set_loops_closed(bool closed);
  bool loops_closed() const { return closed_; }
  void set_loop_enabled(const std::string& loop_id, bool enabled);
  const LoopState& loop_state(const std::string& loop_id) const;
  const std::vector<LoopSpec>& slow_loops() const { return slow_; }
  const FastLoopExecutor* fast_loop() const { return fast_ ? &*fast_ : nullptr; }

  const InventoryConfig& config() const { return cfg_; }

  // 1 Hz device status publication.
  std::function<void(TimeNs, const Device&)> on_status;

 private:
  void tick(TimeNs t);
  std::optional<double> sample(const LoopSpec& l);

  InventoryConfig cfg_;
  std::vector<Device> devices_;
  std::map<std::string, std::size_t> index_;
  std::vector<LoopSpec> slow_;
  std::vector<LoopState> slow_state_;
  std::optional<FastLoopExecutor> fast_;
  std::map<std::string, double> injected_;
  std::set<std::string> muted_;
  bool closed_ = false;
  TimeNs now_ = 0;
};

}  // namespace mcao::devices
