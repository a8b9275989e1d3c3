#include "mcao/rtc/control.hpp"

#include <algorithm>
#include <string>

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

LoopState make_loop(int length, float gain, float leak, float stroke) {
  if (length < 0) throw UsageError("negative loop length");
  if (!(leak >= 0.0f && leak <= 1.0f)) throw UsageError("leak must lie in [0, 1]");
  if (!(stroke > 0.0f)) throw UsageError("stroke must be positive");
  LoopState s;
  s.integrator.assign(static_cast<std::size_t>(length), 0.0f);
  s.gain = gain;
  s.leak = leak;
  s.stroke = stroke;
  return s;
}

std::span<const float> apply_control_law(LoopState& state, std::span<const float> increment) {
  if (increment.size() != state.integrator.size())
    throw UsageError("increment has " + std::to_string(increment.size()) + " entries, loop has " +
                     std::to_string(state.integrator.size()));
  if (!(state.leak >= 0.0f && state.leak <= 1.0f)) throw UsageError("leak must lie in [0, 1]");
  if (!state.closed) return state.integrator;
  const float keep = 1.0f - state.leak;
  const float g = state.gain;
  const float s = state.stroke;
  float* c = state.integrator.data();
  for (std::size_t i = 0; i < increment.size(); ++i) c[i] = std::clamp(keep * c[i] + g * increment[i], -s, s);
  return state.integrator;
}

}  // namespace mcao::rtc
