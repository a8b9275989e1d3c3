#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mcao/core/config.hpp"
#include "mcao/rtc/geometry.hpp"
#include "mcao/sim/phase_screen.hpp"

namespace mcao::sim {

inline constexpr double kArcsecPerRad = 206264.80624709636;

struct LayerSpec {
  double altitude_m = 0.0;
  double weight = 1.0;  // fraction of the integrated Cn2
  double wind_x_mps = 0.0;
  double wind_y_mps = 0.0;
};

struct AtmosphereConfig {
  bool enabled = true;
  double r0_m = 0.15;  // integrated, at 500 nm
  std::vector<LayerSpec> layers;
  int screen_size = 256;
  double sampling_m = 0.125;
  int subharmonic_levels = 6;
  std::uint64_t seed = 1;

  static AtmosphereConfig defaults();
  static AtmosphereConfig from_config(const Config& cfg);
  void validate() const;
};

// One screen per layer with r0_i = r0 * weight_i^(-3/5). Disabled
// turbulence yields no screens.
std::vector<PhaseScreen> make_layers(const AtmosphereConfig& cfg);

struct FieldDirection {
  double x_arcsec = 0.0;
  double y_arcsec = 0.0;
};

struct GuideStarGeometry {
  std::vector<FieldDirection> lgs;
  std::vector<FieldDirection> ngs;
  double lgs_range_m = 90'000.0;
  double field_half_width_arcsec = 30.0;  // 1 arcmin square field

  static GuideStarGeometry defaults();
  static GuideStarGeometry from_config(const Config& cfg);
  void validate(double max_layer_altitude_m) const;
};

// Piecewise-bilinear influence functions on the actuator grid. Per axis the
// kernel is (1 - 2k) T(d) + k (T(d - 1) + T(d + 1)), T the unit tent in pitch
// units and k = c / (1 + 2c), so a neighbour responds at `coupling` c of the
// peak and a uniform command produces a flat surface.
class DmSurface {
 public:
  DmSurface(const rtc::DmConfig& dm, double coupling, double nm_per_unit);

  void set_commands(std::span<const float> full);
  void clear();
  double sample(double x_m, double y_m) const;  // nm of OPD
  double altitude_m() const { return altitude_m_; }
  int dm_id() const { return dm_id_; }
  std::span<const double> commands() const { return commands_; }

 private:
  int dm_id_;
  double altitude_m_;
  int grid_;
  double pitch_;
  double side_weight_;
  double nm_per_unit_;
  std::vector<int> index_;  // grid cell -> actuator index, -1 if none
  std::vector<double> commands_;
};

inline constexpr double kParallel = std::numeric_limits<double>::infinity();

// Geometric ray sum from pupil point (x, y) toward a direction: each layer and
// DM contributes its OPD at the ray intercept p (1 - h/H) + theta h, where H is
// the source range (kParallel for stars). Frozen-flow layers are translated
// by wind * t; intercepts outside a screen wrap.
double path_integrate(std::span<const PhaseScreen> screens, std::span<const DmSurface> dms, FieldDirection dir,
                      double range_m, double x_m, double y_m, double time_s = 0.0);

}  // namespace mcao::sim
