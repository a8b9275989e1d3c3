#include "mcao/app/closed_loop.hpp"

#include <numeric>

#include "mcao/core/errors.hpp"
#include "mcao/core/matrix_file.hpp"
#include "mcao/rtc/reconstructor_builder.hpp"

namespace mcao::app {

SetupOptions SetupOptions::from_config(const Config& cfg) {
  SetupOptions o;
  o.tikhonov_scale = cfg.get_double("rtc.tikhonov_scale", o.tikhonov_scale);
  o.filter_lgs_tip_tilt = cfg.get_bool("rtc.filter_lgs_tip_tilt", o.filter_lgs_tip_tilt);
  o.project_aniso_modes = cfg.get_bool("rtc.project_aniso_modes", o.project_aniso_modes);
  o.reconstructor_file = cfg.get_string("rtc.reconstructor_file", "");
  return o;
}

std::shared_ptr<const rtc::RtcSetup> build_rtc_setup(const sim::Simulator& sim, const SetupOptions& options) {
  auto setup = std::make_shared<rtc::RtcSetup>();
  setup->geometry = sim.config().geometry;
  setup->map = sim.map();
  setup->dms = sim.dms();
  setup->map.validate(setup->geometry.subapertures_total);
  const bool has_ngs = setup->geometry.ngs_count == rtc::kNgsSensors;
  if (has_ngs) setup->ngs.mode_shapes = rtc::make_anisoplanatism_modes(setup->dms);

  const auto blocks = rtc::partition_sizes(setup->dms);
  if (!options.reconstructor_file.empty()) {
    setup->reconstructor = rtc::ReconstructorMatrix::from_file(load_matrix(options.reconstructor_file), blocks);
  } else {
    rtc::ReconstructorOptions ro;
    ro.tikhonov_scale = options.tikhonov_scale;
    if (options.filter_lgs_tip_tilt)
      for (const auto& s : setup->map.sensors)
        ro.tip_tilt_groups.emplace_back(s.slope_offset, s.slope_offset + 2 * static_cast<int>(s.subaps.size()));
    // Directions the LGS loop must leave alone: piston (unseen), per-DM tip/tilt
    // (filtered from the slopes, owned by the TTM) and the NGS-controlled modes.
    const int n_act = std::accumulate(blocks.begin(), blocks.end(), 0);
    std::vector<Eigen::VectorXd> blind;
    int first = 0;
    for (const auto& dm : setup->dms) {
      for (int k = 0; k < (options.filter_lgs_tip_tilt ? 3 : 1); ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n_act);
        for (int i = 0; i < dm.active_count; ++i)
          v(first + i) = k == 0 ? 1.0 : k == 1 ? dm.sites[i].x_m : dm.sites[i].y_m;
        blind.push_back(v);
      }
      first += dm.active_count;
    }
    if (has_ngs && options.project_aniso_modes && setup->dms.size() > 1)
      for (int m = 0; m < rtc::kAnisoModes; ++m) {
        Eigen::VectorXd v(n_act);
        int row = 0;
        for (const auto& per_dm : setup->ngs.mode_shapes[m])
          for (float x : per_dm) v(row++) = x;
        blind.push_back(v);
      }
    ro.blind_modes.resize(n_act, static_cast<Eigen::Index>(blind.size()));
    for (std::size_t c = 0; c < blind.size(); ++c) ro.blind_modes.col(static_cast<Eigen::Index>(c)) = blind[c];
    const Eigen::MatrixXd poke = sim.measure_poke_matrix(sim.config().poke_amplitude);
    setup->reconstructor = rtc::build_reconstructor(poke, blocks, ro);
  }
  if (has_ngs) setup->ngs.matrix = rtc::ngs_matrix_from_interaction(sim.measure_ngs_interaction(setup->ngs.mode_shapes));
  return setup;
}

namespace {

double mean_from(const std::vector<double>& v, std::size_t first) {
  if (first >= v.size()) return 0.0;
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(first), v.end(), 0.0) /
         static_cast<double>(v.size() - first);
}

}  // namespace

double LoopStats::mean_residual() const { return mean_from(residual_rms, 0); }
double LoopStats::mean_wfe() const { return mean_from(wfe_nm, 0); }
double LoopStats::mean_residual_from(std::size_t first) const { return mean_from(residual_rms, first); }
double LoopStats::mean_wfe_from(std::size_t first) const { return mean_from(wfe_nm, first); }

LoopStats run_loop(sim::Simulator& sim, rtc::Pipeline& pipeline, const LoopRun& run) {
  LoopStats stats;
  pipeline.set_loops_closed(run.closed);
  const auto field = sim::Simulator::field_grid(sim.config().stars.field_half_width_arcsec * 25.0 / 30.0, run.wfe_grid);
  for (std::uint64_t k = 0; k < run.frames; ++k) {
    const std::uint64_t id = run.first_frame_id + k;
    const auto frames = sim.render(id);
    const rtc::FrameResult r = pipeline.run_frame(frames);
    if (r.status != rtc::FrameStatus::kOk) ++stats.coherence_errors;
    if (r.deadline_missed) ++stats.deadline_misses;
    if (r.deadline_missed != (r.total_latency_ns > pipeline.options().deadline_ns)) ++stats.flag_mismatches;
    stats.residual_rms.push_back(r.residual_rms);
    stats.latency_ns.push_back(r.total_latency_ns);
    if (run.wfe_every > 0 && k % static_cast<std::uint64_t>(run.wfe_every) == 0)
      stats.wfe_nm.push_back(sim.field_rms_wfe(field, static_cast<double>(id) / sim.config().geometry.frame_rate_hz).mean_nm);
    sim.set_commands(r.dm, r.ttm);
  }
  return stats;
}

}  // namespace mcao::app
