#pragma once

#include <span>
#include <vector>

namespace mcao::rtc {

// Leaky integrator c <- (1 - leak) c + gain * increment, clamped to +-stroke.
struct LoopState {
  std::vector<float> integrator;
  float gain = 0.5f;
  float leak = 0.01f;
  float stroke = 1.0f;
  bool closed = false;
};

struct ControlState {
  std::vector<LoopState> dm;
  LoopState ttm;
};

LoopState make_loop(int length, float gain, float leak, float stroke);

// Updates the state in place and returns the clamped commands. An open loop
// ignores the increment and returns the frozen integrator. Throws UsageError
// on a length mismatch or a leak outside [0, 1].
std::span<const float> apply_control_law(LoopState& state, std::span<const float> increment);

}  // namespace mcao::rtc
