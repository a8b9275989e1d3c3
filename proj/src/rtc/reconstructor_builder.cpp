#include "mcao/rtc/reconstructor_builder.hpp"

#include <numeric>
#include <string>

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

namespace {

// Removes the mean x and mean y slope of each group from every column.
void remove_group_tilt(Eigen::MatrixXd& m, const std::vector<std::pair<int, int>>& groups) {
  for (const auto& [begin, end] : groups) {
    if (begin < 0 || end > m.rows() || begin >= end || (end - begin) % 2 != 0)
      throw ConfigError("invalid tip/tilt group [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
    const int n = (end - begin) / 2;
    for (int axis = 0; axis < 2; ++axis) {
      auto rows = Eigen::Map<Eigen::MatrixXd, 0, Eigen::Stride<Eigen::Dynamic, 2>>(
          m.data() + begin + axis, n, m.cols(), Eigen::Stride<Eigen::Dynamic, 2>(m.rows(), 2));
      const Eigen::RowVectorXd mean = rows.colwise().mean();
      rows.rowwise() -= mean;
    }
  }
}

}  // namespace

ReconstructorMatrix build_reconstructor(const Eigen::MatrixXd& poke, std::vector<int> block_sizes,
                                        const ReconstructorOptions& options) {
  const int slopes = static_cast<int>(poke.rows());
  const int acts = static_cast<int>(poke.cols());
  if (std::accumulate(block_sizes.begin(), block_sizes.end(), 0) != acts)
    throw ConfigError("poke matrix columns do not match the DM partitions");
  if (options.blind_modes.size() > 0 && options.blind_modes.rows() != acts)
    throw ConfigError("blind modes must have one row per active actuator");

  Eigen::MatrixXd mf = poke;
  remove_group_tilt(mf, options.tip_tilt_groups);

  Eigen::MatrixXd normal = mf.transpose() * mf;
  const double mean_diag = acts > 0 ? normal.diagonal().mean() : 0.0;
  const double lambda = options.tikhonov_scale * (mean_diag > 0 ? mean_diag : 1.0);
  normal.diagonal().array() += lambda;
  Eigen::MatrixXd r = normal.ldlt().solve(mf.transpose());

  if (options.blind_modes.cols() > 0) {
    const Eigen::MatrixXd& b = options.blind_modes;
    const Eigen::MatrixXd coeff = (b.transpose() * b).ldlt().solve(b.transpose() * r);
    r -= b * coeff;
  }
  r = -r;

  std::vector<float> values(static_cast<std::size_t>(acts) * slopes);
  for (int i = 0; i < acts; ++i)
    for (int j = 0; j < slopes; ++j) values[static_cast<std::size_t>(i) * slopes + j] = static_cast<float>(r(i, j));
  return ReconstructorMatrix(acts, slopes, std::move(values), std::move(block_sizes));
}

}  // namespace mcao::rtc
