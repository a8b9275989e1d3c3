#include "mcao/sim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcao/core/errors.hpp"
#include "mcao/core/rng.hpp"

namespace mcao::sim {

AtmosphereConfig AtmosphereConfig::defaults() {
  AtmosphereConfig a;
  a.layers = {{0.0, 0.65, 8.0, 3.0}, {8000.0, 0.35, -6.0, 9.0}};
  return a;
}

AtmosphereConfig AtmosphereConfig::from_config(const Config& cfg) {
  AtmosphereConfig a = defaults();
  a.enabled = cfg.get_bool("atmosphere.enabled", a.enabled);
  a.r0_m = cfg.get_double("atmosphere.r0_m", a.r0_m);
  a.screen_size = static_cast<int>(cfg.get_int("atmosphere.screen_size", a.screen_size));
  a.sampling_m = cfg.get_double("atmosphere.sampling_m", a.sampling_m);
  a.subharmonic_levels = static_cast<int>(cfg.get_int("atmosphere.subharmonic_levels", a.subharmonic_levels));
  a.seed = static_cast<std::uint64_t>(cfg.get_int("atmosphere.seed", static_cast<long long>(a.seed)));
  if (cfg.has("atmosphere.altitudes_m")) {
    const auto alt = cfg.get_doubles("atmosphere.altitudes_m", {});
    const auto w = cfg.get_doubles("atmosphere.weights", std::vector<double>(alt.size(), 1.0 / alt.size()));
    const auto vx = cfg.get_doubles("atmosphere.wind_x_mps", std::vector<double>(alt.size(), 0.0));
    const auto vy = cfg.get_doubles("atmosphere.wind_y_mps", std::vector<double>(alt.size(), 0.0));
    if (w.size() != alt.size() || vx.size() != alt.size() || vy.size() != alt.size())
      throw ConfigError("atmosphere layer lists must have equal lengths");
    a.layers.clear();
    for (std::size_t i = 0; i < alt.size(); ++i) a.layers.push_back({alt[i], w[i], vx[i], vy[i]});
  }
  a.validate();
  return a;
}

void AtmosphereConfig::validate() const {
  if (!(r0_m > 0)) throw ConfigError("atmosphere.r0_m must be positive");
  if (!(sampling_m > 0)) throw ConfigError("atmosphere.sampling_m must be positive");
  if (screen_size <= 0 || (screen_size & (screen_size - 1))) throw ConfigError("atmosphere.screen_size must be a power of two");
  for (const auto& l : layers)
    if (!(l.weight > 0) || l.altitude_m < 0) throw ConfigError("atmosphere layers need positive weights and altitudes >= 0");
  for (std::size_t i = 1; i < layers.size(); ++i)
    if (layers[i].altitude_m < layers[i - 1].altitude_m) throw ConfigError("atmosphere layers must be sorted by altitude");
}

std::vector<PhaseScreen> make_layers(const AtmosphereConfig& cfg) {
  cfg.validate();
  std::vector<PhaseScreen> out;
  if (!cfg.enabled) return out;
  double total = 0.0;
  for (const auto& l : cfg.layers) total += l.weight;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerSpec& l = cfg.layers[i];
    const double r0 = std::isinf(cfg.r0_m) ? cfg.r0_m : cfg.r0_m * std::pow(l.weight / total, -3.0 / 5.0);
    PhaseScreen s = generate_phase_screen(derive_seed(cfg.seed, {i}), r0, cfg.screen_size, cfg.sampling_m,
                                          {cfg.subharmonic_levels});
    s.altitude_m = l.altitude_m;
    s.wind_x_mps = l.wind_x_mps;
    s.wind_y_mps = l.wind_y_mps;
    out.push_back(std::move(s));
  }
  return out;
}

GuideStarGeometry GuideStarGeometry::defaults() {
  GuideStarGeometry g;
  g.lgs = {{0, 0}, {-30, -30}, {30, -30}, {-30, 30}, {30, 30}};
  g.ngs = {{-20, -20}, {25, -10}, {0, 25}};
  return g;
}

namespace {

std::vector<FieldDirection> directions(const Config& cfg, const std::string& key, std::vector<FieldDirection> fallback) {
  if (!cfg.has(key)) return fallback;
  const auto v = cfg.get_doubles(key, {});
  if (v.size() % 2) throw ConfigError(key + " must list x,y pairs");
  std::vector<FieldDirection> out;
  for (std::size_t i = 0; i < v.size(); i += 2) out.push_back({v[i], v[i + 1]});
  return out;
}

}  // namespace

GuideStarGeometry GuideStarGeometry::from_config(const Config& cfg) {
  GuideStarGeometry g = defaults();
  g.lgs = directions(cfg, "stars.lgs_arcsec", g.lgs);
  g.ngs = directions(cfg, "stars.ngs_arcsec", g.ngs);
  g.lgs_range_m = cfg.get_double("stars.lgs_range_m", g.lgs_range_m);
  g.field_half_width_arcsec = cfg.get_double("stars.field_half_width_arcsec", g.field_half_width_arcsec);
  return g;
}

void GuideStarGeometry::validate(double max_layer_altitude_m) const {
  auto inside = [&](const FieldDirection& d) {
    return std::abs(d.x_arcsec) <= field_half_width_arcsec + 1e-9 && std::abs(d.y_arcsec) <= field_half_width_arcsec + 1e-9;
  };
  for (const auto& d : lgs)
    if (!inside(d)) throw ConfigError("LGS direction outside the field");
  for (const auto& d : ngs)
    if (!inside(d)) throw ConfigError("NGS direction outside the field");
  if (!(lgs_range_m > max_layer_altitude_m)) throw ConfigError("LGS range must exceed the highest layer or DM");
}

DmSurface::DmSurface(const rtc::DmConfig& dm, double coupling, double nm_per_unit)
    : dm_id_(dm.dm_id),
      altitude_m_(dm.altitude_m),
      grid_(dm.grid),
      pitch_(dm.pitch_m),
      side_weight_(coupling / (1.0 + 2.0 * coupling)),
      nm_per_unit_(nm_per_unit),
      index_(static_cast<std::size_t>(dm.grid) * dm.grid, -1),
      commands_(static_cast<std::size_t>(dm.total_count()), 0.0) {
  if (!(coupling >= 0.0 && coupling < 0.5)) throw ConfigError("DM coupling must lie in [0, 0.5)");
  for (int k = 0; k < dm.total_count(); ++k) index_[static_cast<std::size_t>(dm.sites[k].row) * grid_ + dm.sites[k].col] = k;
}

void DmSurface::set_commands(std::span<const float> full) {
  if (full.size() != commands_.size()) throw UsageError("DM command vector has the wrong length");
  std::copy(full.begin(), full.end(), commands_.begin());
}

void DmSurface::clear() { std::fill(commands_.begin(), commands_.end(), 0.0); }

double DmSurface::sample(double x_m, double y_m) const {
  const double c = (grid_ - 1) / 2.0;
  const double u = x_m / pitch_ + c, v = y_m / pitch_ + c;
  const double side = side_weight_;
  auto kernel = [side](double d) {
    d = std::abs(d);
    const double t0 = std::max(0.0, 1.0 - d), t1 = std::max(0.0, 1.0 - std::abs(d - 1.0));
    return (1.0 - 2.0 * side) * t0 + side * t1;  // T(d + 1) vanishes for d >= 0
  };
  const int c0 = std::max(0, static_cast<int>(std::ceil(u - 2.0))), c1 = std::min(grid_ - 1, static_cast<int>(std::floor(u + 2.0)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(v - 2.0))), r1 = std::min(grid_ - 1, static_cast<int>(std::floor(v + 2.0)));
  double sum = 0.0;
  for (int r = r0; r <= r1; ++r) {
    const double wy = kernel(r - v);
    if (wy <= 0) continue;
    for (int k = c0; k <= c1; ++k) {
      const int idx = index_[static_cast<std::size_t>(r) * grid_ + k];
      if (idx < 0) continue;
      const double wx = kernel(k - u);
      if (wx > 0) sum += commands_[idx] * wx * wy;
    }
  }
  return sum * nm_per_unit_;
}

double path_integrate(std::span<const PhaseScreen> screens, std::span<const DmSurface> dms, FieldDirection dir,
                      double range_m, double x_m, double y_m, double time_s) {
  const double tx = dir.x_arcsec / kArcsecPerRad, ty = dir.y_arcsec / kArcsecPerRad;
  auto intercept = [&](double h, double& px, double& py) {
    const double scale = std::isinf(range_m) ? 1.0 : 1.0 - h / range_m;
    px = x_m * scale + tx * h;
    py = y_m * scale + ty * h;
  };
  double opd = 0.0;
  double px, py;
  for (const PhaseScreen& s : screens) {
    intercept(s.altitude_m, px, py);
    opd += s.sample(px - s.wind_x_mps * time_s, py - s.wind_y_mps * time_s);
  }
  for (const DmSurface& d : dms) {
    intercept(d.altitude_m(), px, py);
    opd += d.sample(px, py);
  }
  return opd;
}

}  // namespace mcao::sim
