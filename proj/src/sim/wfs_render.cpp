#include "mcao/sim/wfs_render.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mcao/core/errors.hpp"
#include "mcao/sim/optics.hpp"

namespace mcao::sim {
namespace {

// CDF of a unit-area triangle of half-width w centred at 0.
double triangle_cdf(double x, double w) {
  if (x <= -w) return 0.0;
  if (x >= w) return 1.0;
  const double t = (w - std::abs(x)) / w;
  return x < 0 ? 0.5 * t * t : 1.0 - 0.5 * t * t;
}

std::uint16_t to_adu(double expected, const SensorModel& model, std::mt19937_64& rng) {
  double v = expected;
  if (model.noise) {
    v = expected > 0 ? static_cast<double>(std::poisson_distribution<long long>(expected)(rng)) : 0.0;
    if (model.read_noise_adu > 0) v += std::normal_distribution<double>(0.0, model.read_noise_adu)(rng);
  }
  return static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, 65535.0));
}

}  // namespace

double triangle_mass(double a, double b, double c, double w) { return triangle_cdf(b - c, w) - triangle_cdf(a - c, w); }

int lattice_side(const rtc::SensorLayout& layout) { return 2 * layout.grid + 1; }

std::pair<double, double> lattice_point(const rtc::SensorLayout& layout, int i, int j) {
  const double h = layout.pitch_m / 2.0;
  return {(j - layout.grid) * h, (i - layout.grid) * h};
}

std::vector<std::array<double, 2>> subaperture_gradients(const rtc::SensorLayout& layout, std::span<const double> lattice) {
  const int n = lattice_side(layout);
  if (lattice.size() != static_cast<std::size_t>(n) * n) throw UsageError("OPD lattice has the wrong size");
  auto at = [&](int i, int j) { return lattice[static_cast<std::size_t>(i) * n + j]; };
  auto edge = [](double a, double b, double c) { return 0.25 * a + 0.5 * b + 0.25 * c; };
  std::vector<std::array<double, 2>> out;
  out.reserve(layout.subaps.size());
  for (const auto& s : layout.subaps) {
    const int i = 2 * s.row, j = 2 * s.col;
    const double left = edge(at(i, j), at(i + 1, j), at(i + 2, j));
    const double right = edge(at(i, j + 2), at(i + 1, j + 2), at(i + 2, j + 2));
    const double low = edge(at(i, j), at(i, j + 1), at(i, j + 2));
    const double high = edge(at(i + 2, j), at(i + 2, j + 1), at(i + 2, j + 2));
    out.push_back({(right - left) / layout.pitch_m, (high - low) / layout.pitch_m});
  }
  return out;
}

double gradient_to_pixels(double gradient_nm_per_m, const SensorModel& model) {
  return gradient_nm_per_m * 1e-9 * kArcsecPerRad / model.plate_scale_arcsec;
}

rtc::WfsFrame render_wfs_pixels(const rtc::SensorLayout& layout, std::span<const double> lattice,
                                const SensorModel& model, std::uint64_t seed, std::uint64_t frame_id,
                                TimeNs timestamp) {
  rtc::WfsFrame f;
  f.sensor_id = static_cast<std::uint16_t>(layout.sensor_id);
  f.frame_id = frame_id;
  f.timestamp = timestamp;
  f.width = static_cast<std::uint16_t>(layout.width);
  f.height = static_cast<std::uint16_t>(layout.height);
  f.pixels.assign(static_cast<std::size_t>(layout.width) * layout.height, 0);
  std::mt19937_64 rng(seed);

  const auto grads = subaperture_gradients(layout, lattice);
  const double w = model.spot_half_width;
  std::vector<double> mx, my;
  for (std::size_t k = 0; k < layout.subaps.size(); ++k) {
    const auto& win = layout.subaps[k].window;
    const double cx = (win.width - 1) / 2.0 + gradient_to_pixels(grads[k][0], model);
    const double cy = (win.height - 1) / 2.0 + gradient_to_pixels(grads[k][1], model);
    mx.resize(static_cast<std::size_t>(win.width));
    my.resize(static_cast<std::size_t>(win.height));
    for (int x = 0; x < win.width; ++x) mx[x] = triangle_mass(x - 0.5, x + 0.5, cx, w);
    for (int y = 0; y < win.height; ++y) my[y] = triangle_mass(y - 0.5, y + 0.5, cy, w);
    for (int y = 0; y < win.height; ++y) {
      std::uint16_t* line = f.pixels.data() + static_cast<std::size_t>(win.y0 + y) * layout.width + win.x0;
      for (int x = 0; x < win.width; ++x) line[x] = to_adu(model.flux * mx[x] * my[y], model, rng);
    }
  }
  if (model.noise && model.read_noise_adu > 0) {
    // Dark pixels between illuminated windows still carry read noise.
    std::vector<char> lit(f.pixels.size(), 0);
    for (const auto& s : layout.subaps)
      for (int y = 0; y < s.window.height; ++y)
        std::fill_n(lit.begin() + static_cast<std::ptrdiff_t>((s.window.y0 + y) * layout.width + s.window.x0), s.window.width, 1);
    for (std::size_t i = 0; i < f.pixels.size(); ++i)
      if (!lit[i]) f.pixels[i] = to_adu(0.0, model, rng);
  }
  return f;
}

rtc::WfsFrame render_quad_cell(int sensor_id, double tilt_x_arcsec, double tilt_y_arcsec, const SensorModel& model,
                               std::uint64_t seed, std::uint64_t frame_id, TimeNs timestamp) {
  rtc::WfsFrame f;
  f.sensor_id = static_cast<std::uint16_t>(sensor_id);
  f.frame_id = frame_id;
  f.timestamp = timestamp;
  f.width = f.height = 2;
  f.pixels.resize(4);
  std::mt19937_64 rng(seed);
  const double w = model.spot_half_width;
  const double right = 1.0 - triangle_cdf(-tilt_x_arcsec, w);
  const double high = 1.0 - triangle_cdf(-tilt_y_arcsec, w);
  const double mx[2] = {1.0 - right, right}, my[2] = {1.0 - high, high};
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) f.pixels[y * 2 + x] = to_adu(model.flux * mx[x] * my[y], model, rng);
  return f;
}

}  // namespace mcao::sim
