#pragma once

#include <utility>
#include <vector>

#include "mcao/core/config.hpp"

namespace mcao::rtc {

struct DmSpec {
  double altitude_m = 0.0;
  int grid = 0;          // actuator grid is grid x grid
  double pitch_m = 0.5;  // actuator spacing at the conjugate altitude
  int active = 0;
  int inactive = 0;
  float stroke = 1.0f;   // command clamp, normalized units
};

// Loop geometry shared by the RTC and the optical simulator.
struct Geometry {
  double pupil_diameter_m = 8.0;
  double frame_rate_hz = 800.0;
  int lgs_count = 5;
  int lgs_grid = 24;
  int subapertures_total = 2040;
  int subap_pixels = 6;
  int ngs_count = 3;  // 0 or 3
  int ngs_pixels = 2;
  std::vector<DmSpec> dms;

  static Geometry defaults();
  // One 16x16 LGS sensor, one ground DM, no NGS: the bench-scale configuration.
  static Geometry reduced();
  static Geometry from_config(const Config& cfg);

  int subaps_per_sensor() const { return lgs_count > 0 ? subapertures_total / lgs_count : 0; }
  // Pitch chosen so the illuminated subapertures tile an area equal to the pupil.
  double subap_pitch_m() const;
  int active_total() const;
  int inactive_total() const;
  void validate() const;
};

struct Window {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

struct Subaperture {
  int row = 0;
  int col = 0;
  Window window;
  int slope_index = 0;  // x slope; y slope at slope_index + 1
  float ref_x = 0.0f;
  float ref_y = 0.0f;
};

struct SensorLayout {
  int sensor_id = 0;
  int grid = 0;
  int width = 0;
  int height = 0;
  double pitch_m = 0.0;
  int slope_offset = 0;
  std::vector<Subaperture> subaps;  // raster order

  // Pupil-plane centre of a subaperture, meters.
  std::pair<double, double> center_m(const Subaperture& s) const;
};

class SubapertureMap {
 public:
  std::vector<SensorLayout> sensors;

  int total_subapertures() const;
  int slope_count() const { return 2 * total_subapertures(); }
  bool is_lgs(int sensor_id) const;
  const SensorLayout& sensor(int sensor_id) const;

  // Windows inside their frame and disjoint; slope indices a bijection onto
  // 0..2N-1; total equals expected_total. Throws ConfigError.
  void validate(int expected_total) const;
};

SubapertureMap build_subaperture_map(const Geometry& g);

struct ActuatorSite {
  int row = 0;
  int col = 0;
  double x_m = 0.0;
  double y_m = 0.0;
};

struct SlaveLink {
  int active_index = 0;
  float weight = 0.0f;
};

struct DmConfig {
  int dm_id = 0;
  double altitude_m = 0.0;
  int grid = 0;
  double pitch_m = 0.0;
  float stroke = 1.0f;
  int active_count = 0;
  std::vector<ActuatorSite> sites;               // active sites first, then inactive
  std::vector<std::vector<SlaveLink>> slaving;   // one list per inactive actuator

  int total_count() const { return static_cast<int>(sites.size()); }
  int inactive_count() const { return total_count() - active_count; }
  void validate() const;
};

// Actuators are the grid points nearest the DM centre; the innermost
// `active` are driven, the next `inactive` are slaved by inverse distance
// to their nearest active neighbours.
std::vector<DmConfig> build_dm_configs(const Geometry& g);

std::vector<int> partition_sizes(const std::vector<DmConfig>& dms);

}  // namespace mcao::rtc
