#include "mcao/rtc/flops.hpp"

#include "mcao/core/errors.hpp"
#include "mcao/rtc/types.hpp"

namespace mcao::rtc {

double FlopBudget::term(const std::string& name) const {
  for (const auto& t : lgs_terms)
    if (t.name == name) return t.flops_per_second;
  for (const auto& t : ngs_terms)
    if ("ngs_" + t.name == name) return t.flops_per_second;
  throw UsageError("unknown flop term '" + name + "'");
}

FlopBudget estimate_flops(const SubapertureMap& map, const std::vector<DmConfig>& dms, int ngs_count,
                          double frame_rate_hz) {
  FlopBudget b;
  const double n_sub = map.total_subapertures();
  double n_act = 0.0, links = 0.0, mode_len = 0.0;
  for (const auto& dm : dms) {
    n_act += dm.active_count;
    for (const auto& l : dm.slaving) links += static_cast<double>(l.size());
    mode_len += dm.active_count;
  }

  double centroid = 0.0;
  for (const auto& s : map.sensors)
    for (const auto& sub : s.subaps) centroid += 3.0 * sub.window.width * sub.window.height + 2.0;

  const bool lgs = n_sub > 0;
  b.lgs_terms = {
      {"centroiding", centroid * frame_rate_hz},
      {"mvm", lgs ? n_act * 2.0 * n_sub * frame_rate_hz : 0.0},
      {"control_law", lgs ? 3.0 * n_act * frame_rate_hz : 0.0},
      {"slaving", lgs ? links * frame_rate_hz : 0.0},
  };

  const bool ngs = ngs_count > 0;
  const double quad = ngs_count * (2.0 * 4 + 2.0);  // 2x2 cell: two sums per pixel, two divides
  b.ngs_terms = {
      {"quad_cell", ngs ? quad * frame_rate_hz : 0.0},
      {"mvm", ngs ? double(kNgsOutputs) * 2.0 * ngs_count * frame_rate_hz : 0.0},
      {"control_law", ngs ? 3.0 * kNgsOutputs * frame_rate_hz : 0.0},
      {"mode_projection", ngs ? kAnisoModes * mode_len * frame_rate_hz : 0.0},
  };
  for (const auto& t : b.lgs_terms) b.lgs_flops_per_second += t.flops_per_second;
  for (const auto& t : b.ngs_terms) b.ngs_flops_per_second += t.flops_per_second;
  return b;
}

FlopBudget estimate_flops(const Geometry& g) {
  return estimate_flops(build_subaperture_map(g), build_dm_configs(g), g.ngs_count, g.frame_rate_hz);
}

}  // namespace mcao::rtc
