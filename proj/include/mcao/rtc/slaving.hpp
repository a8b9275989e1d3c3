#pragma once

#include <span>

#include "mcao/rtc/geometry.hpp"
#include "mcao/rtc/types.hpp"

namespace mcao::rtc {

// full[0 .. active) = active; full[active + k] = sum of weights * active neighbours.
void slave_inactive(std::span<const float> active, const DmConfig& dm, std::span<float> full);
ActuatorVector slave_inactive(std::span<const float> active, const DmConfig& dm);

}  // namespace mcao::rtc
