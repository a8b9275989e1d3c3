#include "mcao/devices/loops.hpp"

namespace mcao::devices {

double run_loop_tick(const LoopSpec& loop, LoopState& st, std::optional<double> sensor, double target) {
  if (!loop.enabled) return target;
  ++st.ticks;
  if (!sensor) {
    ++st.dropouts;
    return target;
  }
  const double e = loop.setpoint - *sensor;
  st.integral += e;
  return target + loop.kp * e + loop.ki * st.integral;
}

}  // namespace mcao::devices
