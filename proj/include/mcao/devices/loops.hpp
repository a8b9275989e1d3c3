#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "mcao/core/timebase.hpp"
#include "mcao/devices/device.hpp"

namespace mcao::devices {

struct LoopSpec {
  std::string id;
  ControllerId controller = ControllerId::Aom;
  double rate_hz = 1.0;  // one of 0.1, 1, 800
  std::string sensor;    // telemetry channel
  std::string actuator;  // device id
  double kp = 0.5;
  double ki = 0.1;
  double setpoint = 0.0;
  bool enabled = true;

  TimeNs period_ns() const { return static_cast<TimeNs>(std::llround(1e9 / rate_hz)); }
};

struct LoopState {
  double integral = 0.0;
  std::uint64_t ticks = 0;
  std::uint64_t dropouts = 0;
};

// One PI tick: with e = setpoint - sensor and I the running sum of e, the
// actuator target moves by kp*e + ki*I. A missing sample holds the target.
double run_loop_tick(const LoopSpec& loop, LoopState& st, std::optional<double> sensor, double target);

}  // namespace mcao::devices
