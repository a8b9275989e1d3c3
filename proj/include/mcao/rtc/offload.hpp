#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace mcao::rtc {

// Running mean of the most recent TTM commands, consumed by the BTO fast
// steering loop.
class OffloadExporter {
 public:
  explicit OffloadExporter(std::size_t window = 16);

  void push(const std::array<float, 2>& ttm);
  std::array<float, 2> value() const;
  std::size_t size() const { return count_; }
  void reset();

 private:
  std::vector<std::array<float, 2>> ring_;
  std::size_t next_ = 0;
  std::size_t count_ = 0;
};

}  // namespace mcao::rtc
