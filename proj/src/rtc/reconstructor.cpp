#include "mcao/rtc/reconstructor.hpp"

#include <numeric>
#include <string>

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

ReconstructorMatrix::ReconstructorMatrix(int rows, int cols, std::vector<float> values, std::vector<int> block_sizes)
    : rows_(rows), cols_(cols), values_(std::move(values)), block_sizes_(std::move(block_sizes)) {
  if (rows < 0 || cols < 0) throw ConfigError("negative reconstructor dimensions");
  if (values_.size() != static_cast<std::size_t>(rows) * cols)
    throw ConfigError("reconstructor holds " + std::to_string(values_.size()) + " values, expected " +
                      std::to_string(static_cast<std::size_t>(rows) * cols));
  if (std::accumulate(block_sizes_.begin(), block_sizes_.end(), 0) != rows)
    throw ConfigError("reconstructor has " + std::to_string(rows) +
                      " rows but the DM partitions need " +
                      std::to_string(std::accumulate(block_sizes_.begin(), block_sizes_.end(), 0)));
  int begin = 0;
  for (int b : block_sizes_) {
    if (b < 0) throw ConfigError("negative partition size");
    block_begin_.push_back(begin);
    begin += b;
  }
}

ReconstructorMatrix ReconstructorMatrix::from_file(const MatrixFile& file, std::vector<int> block_sizes) {
  return ReconstructorMatrix(static_cast<int>(file.rows), static_cast<int>(file.cols), file.values,
                             std::move(block_sizes));
}

MatrixFile ReconstructorMatrix::to_file() const {
  MatrixFile f;
  f.rows = static_cast<std::uint32_t>(rows_);
  f.cols = static_cast<std::uint32_t>(cols_);
  f.values = values_;
  return f;
}

std::pair<int, int> ReconstructorMatrix::block_rows(int dm_id) const {
  if (dm_id < 0 || dm_id >= partitions()) throw UsageError("unknown dm_id " + std::to_string(dm_id));
  return {block_begin_[dm_id], block_begin_[dm_id] + block_sizes_[dm_id]};
}

void mvm_rows(const float* a, int rows, int cols, const float* x, float* y) {
  constexpr int kLanes = 16;
  const int body = cols - cols % kLanes;
  for (int i = 0; i < rows; ++i) {
    const float* r = a + static_cast<std::size_t>(i) * cols;
    float acc[kLanes] = {};
    for (int j = 0; j < body; j += kLanes)
      for (int l = 0; l < kLanes; ++l) acc[l] += r[j + l] * x[j + l];
    for (int j = body; j < cols; ++j) acc[j - body] += r[j] * x[j];
    for (int w = kLanes / 2; w > 0; w /= 2)
      for (int l = 0; l < w; ++l) acc[l] += acc[l + w];
    y[i] = acc[0];
  }
}

void reconstruct_partition(std::span<const float> slopes, const ReconstructorMatrix& m, int dm_id,
                           std::span<float> out) {
  const auto [begin, end] = m.block_rows(dm_id);
  if (slopes.size() != static_cast<std::size_t>(m.cols()))
    throw UsageError("slope vector has " + std::to_string(slopes.size()) + " entries, reconstructor expects " +
                     std::to_string(m.cols()));
  if (out.size() != static_cast<std::size_t>(end - begin)) throw UsageError("partition output has the wrong length");
  mvm_rows(m.row(begin), end - begin, m.cols(), slopes.data(), out.data());
}

std::vector<float> reconstruct_partition(std::span<const float> slopes, const ReconstructorMatrix& m, int dm_id) {
  const auto [begin, end] = m.block_rows(dm_id);
  std::vector<float> out(static_cast<std::size_t>(end - begin));
  reconstruct_partition(slopes, m, dm_id, out);
  return out;
}

std::vector<float> reconstruct_all(std::span<const float> slopes, const ReconstructorMatrix& m) {
  if (slopes.size() != static_cast<std::size_t>(m.cols())) throw UsageError("slope vector has the wrong length");
  std::vector<float> out(static_cast<std::size_t>(m.rows()));
  mvm_rows(m.values().data(), m.rows(), m.cols(), slopes.data(), out.data());
  return out;
}

}  // namespace mcao::rtc
