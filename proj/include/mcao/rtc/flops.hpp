#pragma once

#include <string>
#include <vector>

#include "mcao/rtc/geometry.hpp"

namespace mcao::rtc {

// One multiply-accumulate counts as one flop; centroiding costs three
// operations per window pixel plus two divides per subaperture.
inline constexpr const char* kFlopConvention = "mac=1;cog=3/px+2/subap";

struct FlopTerm {
  std::string name;
  double flops_per_second = 0.0;
};

struct FlopBudget {
  double lgs_flops_per_second = 0.0;
  double ngs_flops_per_second = 0.0;
  std::vector<FlopTerm> lgs_terms;  // centroiding, mvm, control_law, slaving
  std::vector<FlopTerm> ngs_terms;  // quad_cell, mvm, control_law, mode_projection
  std::string convention = kFlopConvention;

  double term(const std::string& name) const;
};

FlopBudget estimate_flops(const SubapertureMap& map, const std::vector<DmConfig>& dms, int ngs_count,
                          double frame_rate_hz);
FlopBudget estimate_flops(const Geometry& g);

}  // namespace mcao::rtc
