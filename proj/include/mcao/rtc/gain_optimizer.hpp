#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mcao::rtc {

struct GainOptimizerOptions {
  std::vector<double> grid;  // candidate gains, ascending
  double g_min = 0.05;
  double g_max = 0.9;
  double max_step = 0.2;  // fractional change allowed per update
  int window = 256;       // frames per residual window

  static GainOptimizerOptions defaults();
};

// One coordinate-descent step over the gain grid. Evaluates the incumbent and
// every grid gain within the step bound, and moves only on strict improvement.
class GainOptimizer {
 public:
  explicit GainOptimizer(GainOptimizerOptions options);

  double update(double incumbent, const std::function<double(double)>& windowed_residual) const;
  std::vector<double> reachable(double incumbent) const;
  const GainOptimizerOptions& options() const { return options_; }

 private:
  GainOptimizerOptions options_;
};

// Windowed residual a leaky integrator of gain `gain` would have produced on a
// recorded window, replayed from pseudo open-loop commands u_t = increment_t + c_{t-1}.
// Rows of `pseudo_open_loop` are frames; all rows share the length of `initial`,
// the integrator at the start of the window.
double replay_residual(const std::vector<std::vector<float>>& pseudo_open_loop, std::span<const float> initial,
                       double gain, double leak, double stroke);

}  // namespace mcao::rtc
