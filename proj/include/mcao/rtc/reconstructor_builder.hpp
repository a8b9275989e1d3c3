#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcao/rtc/reconstructor.hpp"

namespace mcao::rtc {

struct ReconstructorOptions {
  double tikhonov_scale = 1e-3;  // lambda = scale * mean diagonal of M^T M
  // Slope ranges [begin, end) whose mean x and mean y are removed before
  // reconstruction (per-sensor tip/tilt, handled by the NGS loop).
  std::vector<std::pair<int, int>> tip_tilt_groups;
  // Actuator-space directions the LGS loop must not drive (columns).
  Eigen::MatrixXd blind_modes;
};

// Negative-feedback regularized least-squares inverse of a poke matrix
// (rows = slopes, cols = active actuators):
//   R = -P_blind (M_f^T M_f + lambda I)^-1 M_f^T F
// where F removes the tip/tilt groups and M_f = F M.
ReconstructorMatrix build_reconstructor(const Eigen::MatrixXd& poke, std::vector<int> block_sizes,
                                        const ReconstructorOptions& options);

}  // namespace mcao::rtc
