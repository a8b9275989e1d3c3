#include "mcao/rtc/gain_optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

GainOptimizerOptions GainOptimizerOptions::defaults() {
  GainOptimizerOptions o;
  for (int k = -12; k <= 3; ++k) o.grid.push_back(0.5 * std::pow(1.2, k));
  return o;
}

GainOptimizer::GainOptimizer(GainOptimizerOptions options) : options_(std::move(options)) {
  if (!(options_.g_min > 0 && options_.g_min <= options_.g_max)) throw ConfigError("invalid gain limits");
  if (!(options_.max_step > 0 && options_.max_step <= 0.2 + 1e-12))
    throw ConfigError("gain step bound must lie in (0, 0.2]");
  if (options_.window <= 0) throw ConfigError("optimizer window must be positive");
  std::sort(options_.grid.begin(), options_.grid.end());
}

std::vector<double> GainOptimizer::reachable(double incumbent) const {
  std::vector<double> out;
  const double bound = options_.max_step * incumbent * (1.0 + 1e-9);
  for (double g : options_.grid)
    if (g >= options_.g_min && g <= options_.g_max && std::abs(g - incumbent) <= bound && g != incumbent)
      out.push_back(g);
  return out;
}

double GainOptimizer::update(double incumbent, const std::function<double(double)>& windowed_residual) const {
  double best = incumbent;
  double best_residual = windowed_residual(incumbent);
  for (double g : reachable(incumbent)) {
    const double r = windowed_residual(g);
    if (r < best_residual) {
      best = g;
      best_residual = r;
    }
  }
  return best;
}

double replay_residual(const std::vector<std::vector<float>>& pseudo_open_loop, std::span<const float> initial,
                       double gain, double leak, double stroke) {
  if (pseudo_open_loop.empty()) return 0.0;
  std::vector<double> c(initial.begin(), initial.end());
  double sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& u : pseudo_open_loop) {
    if (u.size() != c.size()) throw UsageError("pseudo open-loop row has the wrong length");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double e = u[i] - c[i];
      sum2 += e * e;
      c[i] = std::clamp((1.0 - leak) * c[i] + gain * e, -stroke, stroke);
    }
    n += c.size();
  }
  return n ? std::sqrt(sum2 / static_cast<double>(n)) : 0.0;
}

}  // namespace mcao::rtc
