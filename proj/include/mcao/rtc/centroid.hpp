#pragma once

#include <cstdint>
#include <span>

#include "mcao/rtc/geometry.hpp"
#include "mcao/rtc/types.hpp"

namespace mcao::rtc {

struct CentroidParams {
  std::uint16_t threshold = 0;  // ADU subtracted from every pixel, clipped at zero
  float gain = 1.0f;            // scalar centroid gain
};

// Thresholded centre of gravity of every illuminated subaperture of one LGS
// frame, written to out[0 .. 2*n_subaps). Sums are accumulated exactly in
// integers, so the result does not depend on pixel visiting order.
void compute_centroids(const WfsFrame& frame, const SensorLayout& layout, const CentroidParams& params,
                       std::span<float> out);

// Returns the frame's segment of the slope vector. Throws UsageError for a
// non-LGS sensor and ConfigError when the frame dimensions disagree with the map.
SlopeVector compute_centroids(const WfsFrame& frame, const SubapertureMap& map, const CentroidParams& params);

// Writes the frame's segment into a full-length slope vector.
void compute_centroids_into(const WfsFrame& frame, const SubapertureMap& map, const CentroidParams& params,
                            std::span<float> slopes);

}  // namespace mcao::rtc
