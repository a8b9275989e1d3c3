#include "mcao/rtc/offload.hpp"

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

OffloadExporter::OffloadExporter(std::size_t window) : ring_(window) {
  if (window == 0) throw UsageError("offload window must be positive");
}

void OffloadExporter::push(const std::array<float, 2>& ttm) {
  ring_[next_] = ttm;
  next_ = (next_ + 1) % ring_.size();
  if (count_ < ring_.size()) ++count_;
}

std::array<float, 2> OffloadExporter::value() const {
  if (count_ == 0) return {0.0f, 0.0f};
  double x = 0.0, y = 0.0;
  for (std::size_t i = 0; i < count_; ++i) {
    x += ring_[i][0];
    y += ring_[i][1];
  }
  return {static_cast<float>(x / count_), static_cast<float>(y / count_)};
}

void OffloadExporter::reset() {
  next_ = 0;
  count_ = 0;
}

}  // namespace mcao::rtc
