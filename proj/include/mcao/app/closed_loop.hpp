#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mcao/core/config.hpp"
#include "mcao/rtc/pipeline.hpp"
#include "mcao/sim/simulator.hpp"

namespace mcao::app {

struct SetupOptions {
  double tikhonov_scale = 1e-3;
  bool filter_lgs_tip_tilt = true;     // leave tip/tilt to the TTM loop
  bool project_aniso_modes = true;     // leave the anisoplanatism modes to the NGS loop
  std::string reconstructor_file;      // load instead of calibrating when set

  static SetupOptions from_config(const Config& cfg);
};

// Calibrates the RTC against the simulator: poke matrix -> reconstructor,
// mode shapes -> NGS interaction -> NGS matrix.
std::shared_ptr<const rtc::RtcSetup> build_rtc_setup(const sim::Simulator& sim, const SetupOptions& options);

struct LoopStats {
  std::vector<double> residual_rms;  // LGS slope RMS per frame
  std::vector<double> wfe_nm;        // field-mean residual WFE per frame (when sampled)
  std::vector<std::int64_t> latency_ns;
  int deadline_misses = 0;
  int coherence_errors = 0;
  int flag_mismatches = 0;  // deadline flag disagreeing with the latency
  double mean_residual() const;
  double mean_wfe() const;
  double mean_residual_from(std::size_t first) const;
  double mean_wfe_from(std::size_t first) const;
};

struct LoopRun {
  std::uint64_t frames = 100;
  bool closed = true;
  int wfe_every = 0;        // sample the field WFE every n frames (0: never)
  int wfe_grid = 3;
  std::uint64_t first_frame_id = 1;
};

// Simulator -> pipeline -> simulator, with commands from frame k applied to frame k+1.
LoopStats run_loop(sim::Simulator& sim, rtc::Pipeline& pipeline, const LoopRun& run);

}  // namespace mcao::app
