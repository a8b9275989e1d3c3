#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mcao/core/config.hpp"
#include "mcao/rtc/geometry.hpp"
#include "mcao/rtc/ngs.hpp"
#include "mcao/rtc/types.hpp"
#include "mcao/sim/optics.hpp"
#include "mcao/sim/phase_screen.hpp"
#include "mcao/sim/wfs_render.hpp"

namespace mcao::sim {

struct SimConfig {
  rtc::Geometry geometry = rtc::Geometry::defaults();
  AtmosphereConfig atmosphere = AtmosphereConfig::defaults();
  GuideStarGeometry stars = GuideStarGeometry::defaults();
  SensorModel lgs_sensor{1.0, 2.0, 1000.0, 1.0, true};
  SensorModel ngs_sensor{1.0, 1.0, 10000.0, 1.0, true};
  double dm_coupling = 0.15;
  double dm_nm_per_unit = 4000.0;
  double ttm_arcsec_per_unit = 2.0;
  double static_aberration_nm = 0.0;  // RMS over the pupil of a fixed ground-layer aberration
  // true: the aberration is rendered through the ground DM's influence functions
  // (plus tilt), so a perfect loop can null it; false: the analytic shape itself.
  bool static_aberration_correctable = true;
  int pupil_samples = 32;             // across the pupil diameter, for NGS tilt and WFE
  std::uint64_t noise_seed = 7;
  double poke_amplitude = 0.1;
  double calibration_flux = 2.0e5;

  static SimConfig from_config(const Config& cfg);
};

struct FieldWfe {
  std::vector<FieldDirection> directions;
  std::vector<double> rms_nm;  // piston-removed, per direction
  double mean_nm = 0.0;
  double uniformity = 1.0;  // max / min
};

// Smooth low-order ground-layer aberration with the given RMS over a pupil of radius R.
PhaseScreen make_static_aberration(int size, double sampling_m, double pupil_radius_m, double rms_nm);

// The same shape sampled at the actuators of a ground DM and rendered through its
// influence functions, plus the shape's tilt; rescaled to the given RMS.
PhaseScreen make_correctable_aberration(int size, double sampling_m, double pupil_radius_m, double rms_nm,
                                        const rtc::DmConfig& dm, double coupling);

// The optical test bed: layered turbulence in front of the DMs and TTM, seen by
// the LGS Shack-Hartmann sensors and the NGS quad cells.
class Simulator {
 public:
  explicit Simulator(SimConfig cfg);

  const SimConfig& config() const { return cfg_; }
  const rtc::SubapertureMap& map() const { return map_; }
  const std::vector<rtc::DmConfig>& dms() const { return dms_; }
  std::span<const PhaseScreen> screens() const { return screens_; }

  void set_turbulence(bool enabled) { turbulence_ = enabled; }
  bool turbulence() const { return turbulence_; }
  void set_commands(std::span<const rtc::ActuatorVector> dm, const std::array<float, 2>& ttm);
  void clear_commands();

  // All sensors of one loop iteration, LGS first. Frozen-flow time is frame_id / rate.
  std::vector<rtc::WfsFrame> render(std::uint64_t frame_id);

  // OPD lattice of one LGS sensor at a given time.
  std::vector<double> lgs_lattice(int sensor, double time_s) const;
  // Least-squares wavefront tilt seen by one NGS, arcsec.
  std::array<double, 2> ngs_tilt(int ngs, double time_s) const;

  // Noiseless slope responses to each active actuator (slaved neighbours
  // included), divided by the amplitude. Turbulence and static aberration are
  // ignored. Rows = slopes, cols = active actuators in DM order.
  Eigen::MatrixXd measure_poke_matrix(double amplitude) const;

  // 6x5 row-major NGS quad-cell response to TTM tip, TTM tilt and the three modes.
  std::array<double, rtc::kNgsInputs * rtc::kNgsOutputs> measure_ngs_interaction(const rtc::ModeShapes& modes) const;

  FieldWfe field_rms_wfe(std::span<const FieldDirection> directions, double time_s) const;
  static std::vector<FieldDirection> field_grid(double half_width_arcsec, int n);

 private:
  std::vector<double> lattice_with(int sensor, std::span<const PhaseScreen> screens, std::span<const DmSurface> dms,
                                   const std::array<float, 2>& ttm, double time_s) const;
  std::array<double, 2> tilt_with(FieldDirection dir, std::span<const PhaseScreen> screens,
                                  std::span<const DmSurface> dms, const std::array<float, 2>& ttm, double time_s) const;
  std::span<const PhaseScreen> active_screens() const;
  double ttm_slope_nm_per_m(float command) const;

  SimConfig cfg_;
  rtc::SubapertureMap map_;
  std::vector<rtc::DmConfig> dms_;
  std::vector<PhaseScreen> screens_;         // turbulence, then the static aberration if any
  std::size_t turbulent_layers_ = 0;
  bool turbulence_ = true;
  std::vector<DmSurface> surfaces_;
  std::array<float, 2> ttm_{};
  std::vector<std::pair<double, double>> pupil_;
};

}  // namespace mcao::sim
