#include "mcao/rtc/centroid.hpp"

#include <algorithm>
#include <string>

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

void compute_centroids(const WfsFrame& frame, const SensorLayout& layout, const CentroidParams& params,
                       std::span<float> out) {
  if (out.size() < 2 * layout.subaps.size()) throw UsageError("centroid output span too short");
  const int thr = params.threshold;
  const std::uint16_t* px = frame.pixels.data();
  const int stride = frame.width;
  std::size_t k = 0;
  for (const Subaperture& s : layout.subaps) {
    const Window& w = s.window;
    std::int64_t sum = 0, sx = 0, sy = 0;
    for (int y = 0; y < w.height; ++y) {
      const std::uint16_t* line = px + static_cast<std::size_t>(w.y0 + y) * stride + w.x0;
      std::int64_t row_sum = 0, row_sx = 0;
      for (int x = 0; x < w.width; ++x) {
        const int v = std::max(static_cast<int>(line[x]) - thr, 0);
        row_sum += v;
        row_sx += static_cast<std::int64_t>(v) * x;
      }
      sum += row_sum;
      sx += row_sx;
      sy += row_sum * y;
    }
    float slope_x = 0.0f, slope_y = 0.0f;
    if (sum > 0) {
      const double n = static_cast<double>(sum);
      const double cx = (static_cast<double>(sx) / n - (w.width - 1) / 2.0) / w.width;
      const double cy = (static_cast<double>(sy) / n - (w.height - 1) / 2.0) / w.height;
      slope_x = static_cast<float>(std::clamp(params.gain * cx - s.ref_x, -0.5, 0.5));
      slope_y = static_cast<float>(std::clamp(params.gain * cy - s.ref_y, -0.5, 0.5));
    }
    out[k++] = slope_x;
    out[k++] = slope_y;
  }
}

namespace {

const SensorLayout& checked_layout(const WfsFrame& frame, const SubapertureMap& map) {
  if (!map.is_lgs(frame.sensor_id))
    throw UsageError("sensor " + std::to_string(frame.sensor_id) + " is not an LGS sensor");
  const SensorLayout& layout = map.sensor(frame.sensor_id);
  if (frame.width != layout.width || frame.height != layout.height ||
      frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height)
    throw ConfigError("frame of sensor " + std::to_string(frame.sensor_id) + " does not match its layout (" +
                      std::to_string(frame.width) + "x" + std::to_string(frame.height) + ")");
  return layout;
}

}  // namespace

SlopeVector compute_centroids(const WfsFrame& frame, const SubapertureMap& map, const CentroidParams& params) {
  const SensorLayout& layout = checked_layout(frame, map);
  SlopeVector out(2 * layout.subaps.size());
  compute_centroids(frame, layout, params, out);
  return out;
}

void compute_centroids_into(const WfsFrame& frame, const SubapertureMap& map, const CentroidParams& params,
                            std::span<float> slopes) {
  const SensorLayout& layout = checked_layout(frame, map);
  if (slopes.size() != static_cast<std::size_t>(map.slope_count()))
    throw UsageError("slope vector length does not match the subaperture map");
  compute_centroids(frame, layout, params, slopes.subspan(layout.slope_offset, 2 * layout.subaps.size()));
}

}  // namespace mcao::rtc
