#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mcao/core/matrix_file.hpp"

namespace mcao::rtc {

// Dense float slopes->actuator map, row-partitioned into one contiguous block per DM.
class ReconstructorMatrix {
 public:
  ReconstructorMatrix() = default;
  ReconstructorMatrix(int rows, int cols, std::vector<float> values, std::vector<int> block_sizes);

  static ReconstructorMatrix from_file(const MatrixFile& file, std::vector<int> block_sizes);
  MatrixFile to_file() const;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int partitions() const { return static_cast<int>(block_sizes_.size()); }
  const std::vector<int>& block_sizes() const { return block_sizes_; }
  std::pair<int, int> block_rows(int dm_id) const;  // [begin, end)

  const float* row(int r) const { return values_.data() + static_cast<std::size_t>(r) * cols_; }
  std::span<const float> values() const { return values_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> values_;
  std::vector<int> block_sizes_;
  std::vector<int> block_begin_;
};

// y[i] = sum_j A[i, j] x[j] for `rows` consecutive rows of stride `cols`.
void mvm_rows(const float* a, int rows, int cols, const float* x, float* y);

// block(dm_id) . slopes. Throws UsageError for an unknown dm_id or a slope
// vector of the wrong length.
void reconstruct_partition(std::span<const float> slopes, const ReconstructorMatrix& m, int dm_id,
                           std::span<float> out);
std::vector<float> reconstruct_partition(std::span<const float> slopes, const ReconstructorMatrix& m, int dm_id);

// Whole-matrix product, used as the monolithic reference.
std::vector<float> reconstruct_all(std::span<const float> slopes, const ReconstructorMatrix& m);

}  // namespace mcao::rtc
