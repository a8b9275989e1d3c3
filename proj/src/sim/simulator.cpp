#include "mcao/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcao/core/errors.hpp"
#include "mcao/core/rng.hpp"
#include "mcao/rtc/centroid.hpp"
#include "mcao/rtc/slaving.hpp"

namespace mcao::sim {

SimConfig SimConfig::from_config(const Config& cfg) {
  SimConfig s;
  s.geometry = rtc::Geometry::from_config(cfg);
  s.atmosphere = AtmosphereConfig::from_config(cfg);
  s.stars = GuideStarGeometry::from_config(cfg);
  const bool noise = cfg.get_bool("sim.noise", true);
  s.lgs_sensor.noise = s.ngs_sensor.noise = noise;
  s.lgs_sensor.plate_scale_arcsec = cfg.get_double("sim.lgs_plate_scale_arcsec", s.lgs_sensor.plate_scale_arcsec);
  s.lgs_sensor.spot_half_width = cfg.get_double("sim.lgs_spot_half_width_px", s.lgs_sensor.spot_half_width);
  s.lgs_sensor.flux = cfg.get_double("sim.lgs_flux", s.lgs_sensor.flux);
  s.lgs_sensor.read_noise_adu = cfg.get_double("sim.read_noise_adu", s.lgs_sensor.read_noise_adu);
  s.ngs_sensor.spot_half_width = cfg.get_double("sim.ngs_spot_half_width_arcsec", s.ngs_sensor.spot_half_width);
  s.ngs_sensor.flux = cfg.get_double("sim.ngs_flux", s.ngs_sensor.flux);
  s.ngs_sensor.read_noise_adu = s.lgs_sensor.read_noise_adu;
  s.dm_coupling = cfg.get_double("sim.dm_coupling", s.dm_coupling);
  s.dm_nm_per_unit = cfg.get_double("sim.dm_nm_per_unit", s.dm_nm_per_unit);
  s.ttm_arcsec_per_unit = cfg.get_double("sim.ttm_arcsec_per_unit", s.ttm_arcsec_per_unit);
  s.static_aberration_nm = cfg.get_double("sim.static_aberration_nm", s.static_aberration_nm);
  s.static_aberration_correctable = cfg.get_bool("sim.static_aberration_correctable", s.static_aberration_correctable);
  s.pupil_samples = static_cast<int>(cfg.get_int("sim.pupil_samples", s.pupil_samples));
  s.noise_seed = static_cast<std::uint64_t>(cfg.get_int("sim.noise_seed", static_cast<long long>(s.noise_seed)));
  s.poke_amplitude = cfg.get_double("sim.poke_amplitude", s.poke_amplitude);
  s.calibration_flux = cfg.get_double("sim.calibration_flux", s.calibration_flux);
  return s;
}

namespace {

constexpr double kTiltX = 0.3, kTiltY = -0.2;

double static_shape(double x, double y, double radius, bool with_tilt) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double u = x / radius, v = y / radius, r2 = u * u + v * v;
  return (with_tilt ? kTiltX * u + kTiltY * v : 0.0) + 1.0 * (2 * r2 - 1) + 0.6 * (u * u - v * v) +
         0.4 * (2 * u * v) + 0.3 * (3 * r2 - 2) * u + 0.3 * std::cos(two_pi * x / 3.2) * std::sin(two_pi * y / 4.1);
}

// Removes the pupil mean and scales the pupil RMS to rms_nm.
void normalize_in_pupil(PhaseScreen& s, double pupil_radius_m, double rms_nm) {
  double sum = 0, sum2 = 0;
  int n = 0;
  for (int i = 0; i < s.size; ++i)
    for (int j = 0; j < s.size; ++j) {
      const double x = (j - s.size / 2) * s.sampling_m, y = (i - s.size / 2) * s.sampling_m;
      const double v = s.at_index(i, j);
      if (x * x + y * y <= pupil_radius_m * pupil_radius_m) {
        sum += v;
        sum2 += v * v;
        ++n;
      }
    }
  const double mean = n ? sum / n : 0.0;
  const double rms = n ? std::sqrt(std::max(sum2 / n - mean * mean, 0.0)) : 0.0;
  for (double& v : s.opd_nm) v = rms > 0 ? (v - mean) * rms_nm / rms : 0.0;
}

PhaseScreen empty_static(int size, double sampling_m) {
  PhaseScreen s;
  s.size = size;
  s.sampling_m = sampling_m;
  s.r0_m = std::numeric_limits<double>::infinity();
  s.opd_nm.resize(static_cast<std::size_t>(size) * size);
  return s;
}

}  // namespace

PhaseScreen make_static_aberration(int size, double sampling_m, double pupil_radius_m, double rms_nm) {
  PhaseScreen s = empty_static(size, sampling_m);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j)
      s.opd_nm[static_cast<std::size_t>(i) * size + j] =
          static_shape((j - size / 2) * sampling_m, (i - size / 2) * sampling_m, pupil_radius_m, true);
  normalize_in_pupil(s, pupil_radius_m, rms_nm);
  return s;
}

PhaseScreen make_correctable_aberration(int size, double sampling_m, double pupil_radius_m, double rms_nm,
                                        const rtc::DmConfig& dm, double coupling) {
  DmSurface surface(dm, coupling, 1.0);
  std::vector<float> active(static_cast<std::size_t>(dm.active_count)), full(static_cast<std::size_t>(dm.total_count()));
  for (int k = 0; k < dm.active_count; ++k)
    active[k] = static_cast<float>(static_shape(dm.sites[k].x_m, dm.sites[k].y_m, pupil_radius_m, false));
  rtc::slave_inactive(active, dm, full);
  surface.set_commands(full);
  PhaseScreen s = empty_static(size, sampling_m);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double x = (j - size / 2) * sampling_m, y = (i - size / 2) * sampling_m;
      s.opd_nm[static_cast<std::size_t>(i) * size + j] =
          surface.sample(x, y) + (kTiltX * x + kTiltY * y) / pupil_radius_m;
    }
  normalize_in_pupil(s, pupil_radius_m, rms_nm);
  return s;
}

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
  const auto& g = cfg_.geometry;
  map_ = rtc::build_subaperture_map(g);
  dms_ = rtc::build_dm_configs(g);
  if (static_cast<int>(cfg_.stars.lgs.size()) < g.lgs_count) throw ConfigError("fewer LGS directions than LGS sensors");
  if (static_cast<int>(cfg_.stars.ngs.size()) < g.ngs_count) throw ConfigError("fewer NGS directions than NGS sensors");
  double top = 0.0;
  for (const auto& l : cfg_.atmosphere.layers) top = std::max(top, l.altitude_m);
  for (const auto& d : dms_) top = std::max(top, d.altitude_m);
  cfg_.stars.validate(top);
  if (cfg_.pupil_samples < 4) throw ConfigError("sim.pupil_samples must be at least 4");

  screens_ = make_layers(cfg_.atmosphere);
  turbulent_layers_ = screens_.size();
  if (cfg_.static_aberration_nm > 0) {
    const double radius = g.pupil_diameter_m / 2.0;
    screens_.push_back(cfg_.static_aberration_correctable
                           ? make_correctable_aberration(cfg_.atmosphere.screen_size, cfg_.atmosphere.sampling_m,
                                                         radius, cfg_.static_aberration_nm, dms_.front(), cfg_.dm_coupling)
                           : make_static_aberration(cfg_.atmosphere.screen_size, cfg_.atmosphere.sampling_m, radius,
                                                    cfg_.static_aberration_nm));
  }
  for (const auto& d : dms_) surfaces_.emplace_back(d, cfg_.dm_coupling, cfg_.dm_nm_per_unit);

  const int n = cfg_.pupil_samples;
  const double r = g.pupil_diameter_m / 2.0, step = g.pupil_diameter_m / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = (j + 0.5) * step - r, y = (i + 0.5) * step - r;
      if (x * x + y * y <= r * r) pupil_.emplace_back(x, y);
    }
}

std::span<const PhaseScreen> Simulator::active_screens() const {
  std::span<const PhaseScreen> all = screens_;
  return turbulence_ ? all : all.subspan(turbulent_layers_);
}

void Simulator::set_commands(std::span<const rtc::ActuatorVector> dm, const std::array<float, 2>& ttm) {
  if (dm.size() != surfaces_.size()) throw UsageError("command set does not match the DM count");
  for (std::size_t d = 0; d < dm.size(); ++d) surfaces_[d].set_commands(dm[d].full);
  ttm_ = ttm;
}

void Simulator::clear_commands() {
  for (auto& s : surfaces_) s.clear();
  ttm_ = {0.0f, 0.0f};
}

double Simulator::ttm_slope_nm_per_m(float command) const {
  return command * cfg_.ttm_arcsec_per_unit / kArcsecPerRad * 1e9;
}

std::vector<double> Simulator::lattice_with(int sensor, std::span<const PhaseScreen> screens,
                                            std::span<const DmSurface> dms, const std::array<float, 2>& ttm,
                                            double time_s) const {
  const rtc::SensorLayout& layout = map_.sensors.at(static_cast<std::size_t>(sensor));
  const FieldDirection dir = cfg_.stars.lgs.at(static_cast<std::size_t>(sensor));
  const int n = lattice_side(layout);
  const double ax = ttm_slope_nm_per_m(ttm[0]), ay = ttm_slope_nm_per_m(ttm[1]);
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto [x, y] = lattice_point(layout, i, j);
      out[static_cast<std::size_t>(i) * n + j] =
          path_integrate(screens, dms, dir, cfg_.stars.lgs_range_m, x, y, time_s) + ax * x + ay * y;
    }
  return out;
}

std::vector<double> Simulator::lgs_lattice(int sensor, double time_s) const {
  return lattice_with(sensor, active_screens(), surfaces_, ttm_, time_s);
}

std::array<double, 2> Simulator::tilt_with(FieldDirection dir, std::span<const PhaseScreen> screens,
                                           std::span<const DmSurface> dms, const std::array<float, 2>& ttm,
                                           double time_s) const {
  double sx = 0, sy = 0, sxx = 0, syy = 0, mx = 0, my = 0;
  for (const auto& [x, y] : pupil_) {
    mx += x;
    my += y;
  }
  mx /= pupil_.size();
  my /= pupil_.size();
  for (const auto& [x, y] : pupil_) {
    const double v = path_integrate(screens, dms, dir, kParallel, x, y, time_s);
    sx += v * (x - mx);
    sy += v * (y - my);
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
  }
  const double to_arcsec = 1e-9 * kArcsecPerRad;
  return {(sx / sxx + ttm_slope_nm_per_m(ttm[0])) * to_arcsec, (sy / syy + ttm_slope_nm_per_m(ttm[1])) * to_arcsec};
}

std::array<double, 2> Simulator::ngs_tilt(int ngs, double time_s) const {
  return tilt_with(cfg_.stars.ngs.at(static_cast<std::size_t>(ngs)), active_screens(), surfaces_, ttm_, time_s);
}

std::vector<rtc::WfsFrame> Simulator::render(std::uint64_t frame_id) {
  const double t = static_cast<double>(frame_id) / cfg_.geometry.frame_rate_hz;
  const TimeNs stamp = seconds_to_ns(t);
  std::vector<rtc::WfsFrame> frames;
  for (int s = 0; s < cfg_.geometry.lgs_count; ++s)
    frames.push_back(render_wfs_pixels(map_.sensors[s], lgs_lattice(s, t), cfg_.lgs_sensor,
                                       derive_seed(cfg_.noise_seed, {static_cast<std::uint64_t>(s), frame_id}),
                                       frame_id, stamp));
  for (int k = 0; k < cfg_.geometry.ngs_count; ++k) {
    const auto tilt = ngs_tilt(k, t);
    const int id = rtc::kFirstNgsSensor + k;
    frames.push_back(render_quad_cell(id, tilt[0], tilt[1], cfg_.ngs_sensor,
                                      derive_seed(cfg_.noise_seed, {static_cast<std::uint64_t>(id), frame_id}),
                                      frame_id, stamp));
  }
  return frames;
}

Eigen::MatrixXd Simulator::measure_poke_matrix(double amplitude) const {
  if (!(amplitude != 0.0)) throw UsageError("poke amplitude must be non-zero");
  int n_act = 0;
  for (const auto& d : dms_) n_act += d.active_count;
  Eigen::MatrixXd poke(map_.slope_count(), n_act);

  SensorModel model = cfg_.lgs_sensor;
  model.noise = false;
  model.flux = cfg_.calibration_flux;
  const rtc::CentroidParams params{0, 1.0f};
  std::vector<float> slopes(static_cast<std::size_t>(map_.slope_count()));
  const std::array<float, 2> no_ttm{};

  int col = 0;
  for (std::size_t d = 0; d < dms_.size(); ++d) {
    const rtc::DmConfig& dm = dms_[d];
    DmSurface surface(dm, cfg_.dm_coupling, cfg_.dm_nm_per_unit);
    std::vector<float> active(static_cast<std::size_t>(dm.active_count), 0.0f);
    std::vector<float> full(static_cast<std::size_t>(dm.total_count()));
    for (int k = 0; k < dm.active_count; ++k, ++col) {
      active[k] = static_cast<float>(amplitude);
      rtc::slave_inactive(active, dm, full);
      active[k] = 0.0f;
      surface.set_commands(full);
      for (int s = 0; s < cfg_.geometry.lgs_count; ++s) {
        const auto lattice = lattice_with(s, {}, std::span<const DmSurface>(&surface, 1), no_ttm, 0.0);
        const auto frame = render_wfs_pixels(map_.sensors[s], lattice, model, 0, 0, 0);
        rtc::compute_centroids_into(frame, map_, params, slopes);
      }
      for (int r = 0; r < map_.slope_count(); ++r) poke(r, col) = slopes[r] / amplitude;
    }
  }
  return poke;
}

std::array<double, rtc::kNgsInputs * rtc::kNgsOutputs> Simulator::measure_ngs_interaction(
    const rtc::ModeShapes& modes) const {
  std::array<double, rtc::kNgsInputs * rtc::kNgsOutputs> g{};
  if (cfg_.geometry.ngs_count != rtc::kNgsSensors) throw ConfigError("NGS interaction needs three NGS sensors");
  SensorModel model = cfg_.ngs_sensor;
  model.noise = false;
  model.flux = cfg_.calibration_flux;
  constexpr double kTtmAmp = 0.02, kModeAmp = 0.02;

  std::vector<DmSurface> surfaces;
  for (const auto& d : dms_) surfaces.emplace_back(d, cfg_.dm_coupling, cfg_.dm_nm_per_unit);
  auto measure = [&](const std::array<float, 2>& ttm) {
    std::array<double, rtc::kNgsInputs> s{};
    for (int k = 0; k < rtc::kNgsSensors; ++k) {
      const auto tilt = tilt_with(cfg_.stars.ngs[k], {}, surfaces, ttm, 0.0);
      const auto f = render_quad_cell(rtc::kFirstNgsSensor + k, tilt[0], tilt[1], model, 0, 0, 0);
      const auto q = rtc::quad_cell_slopes(f);
      s[2 * k] = q[0];
      s[2 * k + 1] = q[1];
    }
    return s;
  };
  auto set_mode = [&](int m, double a) {
    for (std::size_t d = 0; d < dms_.size(); ++d) {
      std::vector<float> active(modes[m][d].size());
      for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<float>(a * modes[m][d][i]);
      std::vector<float> full(static_cast<std::size_t>(dms_[d].total_count()));
      rtc::slave_inactive(active, dms_[d], full);
      surfaces[d].set_commands(full);
    }
  };
  for (int c = 0; c < rtc::kNgsOutputs; ++c) {
    std::array<double, rtc::kNgsInputs> plus{}, minus{};
    double amp = kTtmAmp;
    if (c < 2) {
      std::array<float, 2> t{};
      t[c] = static_cast<float>(kTtmAmp);
      plus = measure(t);
      t[c] = static_cast<float>(-kTtmAmp);
      minus = measure(t);
    } else {
      amp = kModeAmp;
      set_mode(c - 2, kModeAmp);
      plus = measure({});
      set_mode(c - 2, -kModeAmp);
      minus = measure({});
      for (auto& s : surfaces) s.clear();
    }
    for (int r = 0; r < rtc::kNgsInputs; ++r) g[r * rtc::kNgsOutputs + c] = (plus[r] - minus[r]) / (2 * amp);
  }
  return g;
}

FieldWfe Simulator::field_rms_wfe(std::span<const FieldDirection> directions, double time_s) const {
  FieldWfe out;
  const double ax = ttm_slope_nm_per_m(ttm_[0]), ay = ttm_slope_nm_per_m(ttm_[1]);
  for (const FieldDirection& dir : directions) {
    double sum = 0, sum2 = 0;
    for (const auto& [x, y] : pupil_) {
      const double v = path_integrate(active_screens(), surfaces_, dir, kParallel, x, y, time_s) + ax * x + ay * y;
      sum += v;
      sum2 += v * v;
    }
    const double n = static_cast<double>(pupil_.size());
    const double mean = sum / n;
    out.directions.push_back(dir);
    out.rms_nm.push_back(std::sqrt(std::max(sum2 / n - mean * mean, 0.0)));
  }
  if (!out.rms_nm.empty()) {
    double total = 0;
    for (double r : out.rms_nm) total += r;
    out.mean_nm = total / out.rms_nm.size();
    const auto [lo, hi] = std::minmax_element(out.rms_nm.begin(), out.rms_nm.end());
    out.uniformity = *lo > 0 ? *hi / *lo : 1.0;
  }
  return out;
}

std::vector<FieldDirection> Simulator::field_grid(double half_width_arcsec, int n) {
  std::vector<FieldDirection> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double fx = n == 1 ? 0.0 : -half_width_arcsec + 2.0 * half_width_arcsec * j / (n - 1);
      const double fy = n == 1 ? 0.0 : -half_width_arcsec + 2.0 * half_width_arcsec * i / (n - 1);
      out.push_back({fx, fy});
    }
  return out;
}

}  // namespace mcao::sim
