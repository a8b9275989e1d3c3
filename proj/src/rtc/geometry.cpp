#include "mcao/rtc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>

#include "mcao/core/errors.hpp"
#include "mcao/rtc/types.hpp"

namespace mcao::rtc {
namespace {

struct Cell {
  int row;
  int col;
  double r2;
};

// Cells of an n x n grid ordered by distance from the grid centre; ties by row, then column.
std::vector<Cell> cells_by_radius(int n) {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n) * n);
  const double c = (n - 1) / 2.0;
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) cells.push_back({r, k, (r - c) * (r - c) + (k - c) * (k - c)});
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return std::tie(a.r2, a.row, a.col) < std::tie(b.r2, b.row, b.col); });
  return cells;
}

}  // namespace

Geometry Geometry::defaults() {
  Geometry g;
  g.dms = {
      {0.0, 22, 0.5, 240, 120, 1.0f},
      {4500.0, 22, 0.6, 216, 140, 1.0f},
      {9000.0, 22, 0.8, 180, 162, 1.0f},
  };
  return g;
}

Geometry Geometry::reduced() {
  Geometry g;
  g.lgs_count = 1;
  g.lgs_grid = 16;
  g.subapertures_total = 200;
  g.ngs_count = 0;
  g.dms = {{0.0, 20, 0.5, 210, 70, 1.0f}};
  return g;
}

Geometry Geometry::from_config(const Config& cfg) {
  const Geometry d = defaults();
  Geometry g;
  g.pupil_diameter_m = cfg.get_double("geometry.pupil_diameter_m", d.pupil_diameter_m);
  g.frame_rate_hz = cfg.get_double("geometry.frame_rate_hz", d.frame_rate_hz);
  g.lgs_count = static_cast<int>(cfg.get_int("geometry.lgs_count", d.lgs_count));
  g.lgs_grid = static_cast<int>(cfg.get_int("geometry.lgs_grid", d.lgs_grid));
  g.subapertures_total = static_cast<int>(cfg.get_int("geometry.subapertures_total", d.subapertures_total));
  g.subap_pixels = static_cast<int>(cfg.get_int("geometry.subap_pixels", d.subap_pixels));
  g.ngs_count = static_cast<int>(cfg.get_int("geometry.ngs_count", d.ngs_count));
  g.ngs_pixels = static_cast<int>(cfg.get_int("geometry.ngs_pixels", d.ngs_pixels));
  const int dm_count = static_cast<int>(cfg.get_int("geometry.dm_count", static_cast<long long>(d.dms.size())));
  if (dm_count < 1 || dm_count > 8) throw ConfigError("geometry.dm_count must be in 1..8");
  for (int i = 0; i < dm_count; ++i) {
    const DmSpec base = i < static_cast<int>(d.dms.size()) ? d.dms[i] : DmSpec{};
    const std::string s = "dm" + std::to_string(i) + ".";
    DmSpec spec;
    spec.altitude_m = cfg.get_double(s + "altitude_m", base.altitude_m);
    spec.grid = static_cast<int>(cfg.get_int(s + "grid", base.grid));
    spec.pitch_m = cfg.get_double(s + "pitch_m", base.pitch_m);
    spec.active = static_cast<int>(cfg.get_int(s + "active", base.active));
    spec.inactive = static_cast<int>(cfg.get_int(s + "inactive", base.inactive));
    spec.stroke = static_cast<float>(cfg.get_double(s + "stroke", base.stroke));
    g.dms.push_back(spec);
  }
  g.validate();
  return g;
}

double Geometry::subap_pitch_m() const {
  const int n = subaps_per_sensor();
  if (n <= 0) return pupil_diameter_m / std::max(lgs_grid, 1);
  return pupil_diameter_m / (2.0 * std::sqrt(n / std::numbers::pi));
}

int Geometry::active_total() const {
  return std::accumulate(dms.begin(), dms.end(), 0, [](int a, const DmSpec& d) { return a + d.active; });
}

int Geometry::inactive_total() const {
  return std::accumulate(dms.begin(), dms.end(), 0, [](int a, const DmSpec& d) { return a + d.inactive; });
}

void Geometry::validate() const {
  if (pupil_diameter_m <= 0) throw ConfigError("pupil diameter must be positive");
  if (frame_rate_hz <= 0) throw ConfigError("frame rate must be positive");
  if (lgs_count < 0 || lgs_count > kMaxLgsSensors) throw ConfigError("lgs_count must be in 0..5");
  if (subapertures_total < 0) throw ConfigError("subapertures_total must be non-negative");
  if (lgs_count == 0 && subapertures_total != 0) throw ConfigError("subapertures configured without LGS sensors");
  if (lgs_count > 0 && subapertures_total % lgs_count != 0)
    throw ConfigError("subapertures_total must divide evenly across LGS sensors");
  if (lgs_count > 0 && subaps_per_sensor() > lgs_grid * lgs_grid)
    throw ConfigError("illuminated subapertures exceed the lenslet grid");
  if (subap_pixels < 2) throw ConfigError("subap_pixels must be at least 2");
  if (static_cast<long>(lgs_grid) * subap_pixels > 65535) throw ConfigError("frame too large");
  if (ngs_count != 0 && ngs_count != kNgsSensors) throw ConfigError("ngs_count must be 0 or 3");
  if (ngs_pixels < 2 || ngs_pixels % 2 != 0) throw ConfigError("ngs_pixels must be even and >= 2");
  if (dms.empty()) throw ConfigError("at least one DM is required");
  for (std::size_t i = 0; i < dms.size(); ++i) {
    const auto& d = dms[i];
    const std::string id = "dm" + std::to_string(i);
    if (d.grid <= 0 || d.pitch_m <= 0) throw ConfigError(id + ": grid and pitch must be positive");
    if (d.active <= 0 || d.inactive < 0) throw ConfigError(id + ": invalid actuator counts");
    if (d.active + d.inactive > d.grid * d.grid) throw ConfigError(id + ": actuators exceed the grid");
    if (d.stroke <= 0) throw ConfigError(id + ": stroke must be positive");
    if (i > 0 && d.altitude_m < dms[i - 1].altitude_m) throw ConfigError("DMs must be sorted by altitude");
  }
}

std::pair<double, double> SensorLayout::center_m(const Subaperture& s) const {
  const double c = (grid - 1) / 2.0;
  return {(s.col - c) * pitch_m, (s.row - c) * pitch_m};
}

int SubapertureMap::total_subapertures() const {
  int n = 0;
  for (const auto& s : sensors) n += static_cast<int>(s.subaps.size());
  return n;
}

bool SubapertureMap::is_lgs(int sensor_id) const {
  return std::any_of(sensors.begin(), sensors.end(), [&](const SensorLayout& s) { return s.sensor_id == sensor_id; });
}

const SensorLayout& SubapertureMap::sensor(int sensor_id) const {
  for (const auto& s : sensors)
    if (s.sensor_id == sensor_id) return s;
  throw UsageError("sensor " + std::to_string(sensor_id) + " is not an LGS sensor of this map");
}

void SubapertureMap::validate(int expected_total) const {
  if (total_subapertures() != expected_total)
    throw ConfigError("map has " + std::to_string(total_subapertures()) + " subapertures, expected " +
                      std::to_string(expected_total));
  std::vector<int> seen(static_cast<std::size_t>(slope_count()), 0);
  for (const auto& s : sensors) {
    std::vector<char> owner(static_cast<std::size_t>(s.width) * s.height, 0);
    for (const auto& sub : s.subaps) {
      const auto& w = sub.window;
      if (w.x0 < 0 || w.y0 < 0 || w.width <= 0 || w.height <= 0 || w.x0 + w.width > s.width ||
          w.y0 + w.height > s.height)
        throw ConfigError("subaperture window outside frame of sensor " + std::to_string(s.sensor_id));
      for (int y = w.y0; y < w.y0 + w.height; ++y)
        for (int x = w.x0; x < w.x0 + w.width; ++x) {
          char& o = owner[static_cast<std::size_t>(y) * s.width + x];
          if (o) throw ConfigError("overlapping subaperture windows on sensor " + std::to_string(s.sensor_id));
          o = 1;
        }
      for (int k = 0; k < 2; ++k) {
        const int idx = sub.slope_index + k;
        if (idx < 0 || idx >= slope_count() || seen[idx]++) throw ConfigError("slope indices are not a bijection");
      }
    }
  }
}

SubapertureMap build_subaperture_map(const Geometry& g) {
  g.validate();
  SubapertureMap map;
  const int per = g.subaps_per_sensor();
  const int p = g.subap_pixels;
  int offset = 0;
  for (int s = 0; s < g.lgs_count; ++s) {
    SensorLayout layout;
    layout.sensor_id = s;
    layout.grid = g.lgs_grid;
    layout.width = g.lgs_grid * p;
    layout.height = g.lgs_grid * p;
    layout.pitch_m = g.subap_pitch_m();
    layout.slope_offset = offset;
    auto cells = cells_by_radius(g.lgs_grid);
    cells.resize(static_cast<std::size_t>(per));
    std::sort(cells.begin(), cells.end(),
              [](const Cell& a, const Cell& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
    for (const auto& c : cells) {
      Subaperture sub;
      sub.row = c.row;
      sub.col = c.col;
      sub.window = {c.col * p, c.row * p, p, p};
      sub.slope_index = offset;
      offset += 2;
      layout.subaps.push_back(sub);
    }
    map.sensors.push_back(std::move(layout));
  }
  return map;
}

void DmConfig::validate() const {
  const std::string id = "dm" + std::to_string(dm_id);
  if (active_count <= 0 || active_count > total_count()) throw ConfigError(id + ": bad active count");
  if (static_cast<int>(slaving.size()) != inactive_count()) throw ConfigError(id + ": slaving map size mismatch");
  for (const auto& links : slaving) {
    if (links.empty()) throw ConfigError(id + ": inactive actuator without references");
    double sum = 0.0;
    for (const auto& l : links) {
      if (l.active_index < 0 || l.active_index >= active_count)
        throw ConfigError(id + ": slaving references a non-active actuator");
      sum += l.weight;
    }
    if (std::abs(sum - 1.0) > 1e-5) throw ConfigError(id + ": slaving weights do not sum to 1");
  }
}

std::vector<DmConfig> build_dm_configs(const Geometry& g) {
  g.validate();
  std::vector<DmConfig> out;
  for (std::size_t i = 0; i < g.dms.size(); ++i) {
    const DmSpec& spec = g.dms[i];
    DmConfig dm;
    dm.dm_id = static_cast<int>(i);
    dm.altitude_m = spec.altitude_m;
    dm.grid = spec.grid;
    dm.pitch_m = spec.pitch_m;
    dm.stroke = spec.stroke;
    dm.active_count = spec.active;
    const double c = (spec.grid - 1) / 2.0;
    auto cells = cells_by_radius(spec.grid);
    cells.resize(static_cast<std::size_t>(spec.active + spec.inactive));
    for (const auto& cell : cells)
      dm.sites.push_back({cell.row, cell.col, (cell.col - c) * spec.pitch_m, (cell.row - c) * spec.pitch_m});

    for (int k = spec.active; k < dm.total_count(); ++k) {
      const auto& site = dm.sites[k];
      std::vector<std::pair<double, int>> near;
      near.reserve(static_cast<std::size_t>(spec.active));
      for (int a = 0; a < spec.active; ++a)
        near.emplace_back(std::hypot(dm.sites[a].x_m - site.x_m, dm.sites[a].y_m - site.y_m), a);
      std::sort(near.begin(), near.end());
      const double limit = near.front().first * 1.5 + 1e-9;
      std::vector<SlaveLink> links;
      double norm = 0.0;
      for (const auto& [d, a] : near) {
        if (d > limit || links.size() == 4) break;
        links.push_back({a, static_cast<float>(1.0 / d)});
        norm += 1.0 / d;
      }
      float sum = 0.0f;
      for (auto& l : links) {
        l.weight = static_cast<float>(l.weight / norm);
        sum += l.weight;
      }
      links.back().weight += 1.0f - sum;  // absorb float rounding so weights sum to 1
      dm.slaving.push_back(std::move(links));
    }
    dm.validate();
    out.push_back(std::move(dm));
  }
  return out;
}

std::vector<int> partition_sizes(const std::vector<DmConfig>& dms) {
  std::vector<int> sizes;
  for (const auto& d : dms) sizes.push_back(d.active_count);
  return sizes;
}

}  // namespace mcao::rtc
