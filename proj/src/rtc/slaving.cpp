#include "mcao/rtc/slaving.hpp"

#include <algorithm>

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

void slave_inactive(std::span<const float> active, const DmConfig& dm, std::span<float> full) {
  if (active.size() != static_cast<std::size_t>(dm.active_count)) throw UsageError("active vector has the wrong length");
  if (full.size() != static_cast<std::size_t>(dm.total_count())) throw UsageError("full vector has the wrong length");
  std::copy(active.begin(), active.end(), full.begin());
  float* slaved = full.data() + dm.active_count;
  for (const auto& links : dm.slaving) {
    float v = 0.0f;
    for (const SlaveLink& l : links) v += l.weight * active[l.active_index];
    *slaved++ = v;
  }
}

ActuatorVector slave_inactive(std::span<const float> active, const DmConfig& dm) {
  ActuatorVector out;
  out.dm_id = dm.dm_id;
  out.active.assign(active.begin(), active.end());
  out.full.resize(static_cast<std::size_t>(dm.total_count()));
  slave_inactive(active, dm, out.full);
  return out;
}

}  // namespace mcao::rtc
