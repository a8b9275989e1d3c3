#include "mcao/devices/controller.hpp"

#include "mcao/core/errors.hpp"

namespace mcao::devices {

FastLoopExecutor::FastLoopExecutor(LoopSpec spec, std::size_t queue_depth)
    : spec_(std::move(spec)), depth_(queue_depth) {}

void FastLoopExecutor::push_sample(double v) {
  if (samples_.size() == depth_) {
    samples_.pop_front();
    ++dropped_;
  }
  samples_.push_back(v);
}

std::optional<std::pair<std::string, double>> FastLoopExecutor::tick(bool closed) {
  std::optional<double> s;
  if (!samples_.empty()) {
    s = samples_.front();
    samples_.pop_front();
  }
  if (!closed || !spec_.enabled) return std::nullopt;
  target_ = run_loop_tick(spec_, state_, s, target_);
  return std::pair{spec_.actuator, target_};
}

DeviceSystem::DeviceSystem(InventoryConfig cfg) : cfg_(std::move(cfg)), devices_(cfg_.build_devices()) {
  for (std::size_t i = 0; i < devices_.size(); ++i) index_[devices_[i].id] = i;
  for (const auto& l : cfg_.loops) {
    if (!index_.count(l.actuator)) throw ConfigError("loop " + l.id + " drives unknown device " + l.actuator);
    if (!(l.rate_hz > 0) || l.period_ns() % kTickNs != 0)
      throw ConfigError("loop " + l.id + " rate must divide the 800 Hz base tick");
    if (l.rate_hz == 800.0) {
      if (fast_) throw ConfigError("only one 800 Hz loop is supported");
      fast_.emplace(l);
    } else {
      slow_.push_back(l);
    }
  }
  slow_state_.resize(slow_.size());
}

const Device& DeviceSystem::device(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UsageError("unknown device " + id);
  return devices_[it->second];
}

Device& DeviceSystem::device(const std::string& id) {
  return const_cast<Device&>(static_cast<const DeviceSystem&>(*this).device(id));
}

CommandAck DeviceSystem::command(const std::string& id, DeviceVerb verb, double value) {
  auto it = index_.find(id);
  if (it == index_.end()) return {false, "unknown device " + id};
  return device_command(devices_[it->second], verb, value);
}

std::vector<CommandAck> DeviceSystem::command_all(ControllerId c, DeviceVerb verb, double value) {
  std::vector<CommandAck> acks;
  for (auto& d : devices_)
    if (d.controller == c) acks.push_back(device_command(d, verb, value));
  return acks;
}

bool DeviceSystem::controller_ready(ControllerId c) const {
  for (const auto& d : devices_)
    if (d.controller == c && !d.ready()) return false;
  return true;
}

bool DeviceSystem::controller_initialized(ControllerId c) const {
  for (const auto& d : devices_)
    if (d.controller == c && (d.state == DeviceState::Uninitialized || d.state == DeviceState::Fault)) return false;
  return true;
}

void DeviceSystem::push_offload(double x, double) {
  if (fast_) fast_->push_sample(x);
}

void DeviceSystem::inject_sample(const std::string& channel, double v) { injected_[channel] = v; }

void DeviceSystem::mute(const std::string& channel, bool m) {
  if (m)
    muted_.insert(channel);
  else
    muted_.erase(channel);
}

void DeviceSystem::set_loops_closed(bool closed) {
  if (closed && !closed_ && fast_) fast_->sync_target(device(fast_->spec().actuator).target);
  closed_ = closed;
}

void DeviceSystem::set_loop_enabled(const std::string& id, bool enabled) {
  if (fast_ && fast_->spec().id == id) {
    fast_->spec().enabled = enabled;
    return;
  }
  for (auto& l : slow_)
    if (l.id == id) {
      l.enabled = enabled;
      return;
    }
  throw UsageError("unknown loop " + id);
}

const LoopState& DeviceSystem::loop_state(const std::string& id) const {
  if (fast_ && fast_->spec().id == id) return fast_->state();
  for (std::size_t i = 0; i < slow_.size(); ++i)
    if (slow_[i].id == id) return slow_state_[i];
  throw UsageError("unknown loop " + id);
}

std::optional<double> DeviceSystem::sample(const LoopSpec& l) {
  if (muted_.count(l.sensor)) return std::nullopt;
  if (auto it = injected_.find(l.sensor); it != injected_.end()) {
    const double v = it->second;
    injected_.erase(it);
    return v;
  }
  // Synthetic sensor: the actuator's offset from a configured optimum.
  const auto bias = cfg_.sensor_bias.find(l.sensor);
  return device(l.actuator).position - (bias == cfg_.sensor_bias.end() ? 0.0 : bias->second);
}

void DeviceSystem::advance_to(TimeNs t) {
  for (TimeNs k = now_ / kTickNs + 1; k * kTickNs <= t; ++k) tick(k * kTickNs);
  if (t > now_) now_ = t;
}

void DeviceSystem::tick(TimeNs t) {
  constexpr double dt = static_cast<double>(kTickNs) * 1e-9;
  if (fast_)
    if (auto upd = fast_->tick(closed_)) device_command(device(upd->first), DeviceVerb::Move, upd->second);
  for (std::size_t i = 0; i < slow_.size(); ++i) {
    const auto& l = slow_[i];
    if (!closed_ || !l.enabled || t % l.period_ns() != 0) continue;
    auto& dev = device(l.actuator);
    const double target = run_loop_tick(l, slow_state_[i], sample(l), dev.target);
    if (target != dev.target) device_command(dev, DeviceVerb::Move, target);
  }
  for (auto& d : devices_) d = step_device(d, dt);
  if (on_status && t % kNsPerSecond == 0)
    for (const auto& d : devices_) on_status(t, d);
}

}  // namespace mcao::devices
