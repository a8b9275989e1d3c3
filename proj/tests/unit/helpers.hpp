#pragma once

#include <memory>
#include <random>
#include <vector>

#include "mcao/rtc/geometry.hpp"
#include "mcao/rtc/ngs.hpp"
#include "mcao/rtc/pipeline.hpp"
#include "mcao/rtc/types.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline mcao::rtc::WfsFrame random_lgs_frame(const mcao::rtc::SensorLayout& l, std::uint64_t id, Rng& g,
                                            int max_adu = 4000) {
  mcao::rtc::WfsFrame f;
  f.sensor_id = static_cast<std::uint16_t>(l.sensor_id);
  f.frame_id = id;
  f.width = static_cast<std::uint16_t>(l.width);
  f.height = static_cast<std::uint16_t>(l.height);
  std::uniform_int_distribution<int> px(0, max_adu);
  f.pixels.resize(static_cast<std::size_t>(f.width) * f.height);
  for (auto& p : f.pixels) p = static_cast<std::uint16_t>(px(g));
  return f;
}

inline mcao::rtc::WfsFrame quad_frame(int sensor, std::uint64_t id, std::uint16_t ll, std::uint16_t lr,
                                      std::uint16_t hl, std::uint16_t hr) {
  mcao::rtc::WfsFrame f;
  f.sensor_id = static_cast<std::uint16_t>(sensor);
  f.frame_id = id;
  f.width = f.height = 2;
  f.pixels = {ll, lr, hl, hr};  // row 0 is the low row
  return f;
}

// All sensors of one iteration with random pixels.
inline std::vector<mcao::rtc::WfsFrame> random_frames(const mcao::rtc::RtcSetup& s, std::uint64_t id, Rng& g) {
  std::vector<mcao::rtc::WfsFrame> out;
  for (const auto& l : s.map.sensors) out.push_back(random_lgs_frame(l, id, g));
  std::uniform_int_distribution<int> q(0, 3000);
  for (int k = 0; k < s.geometry.ngs_count; ++k)
    out.push_back(quad_frame(mcao::rtc::kFirstNgsSensor + k, id, static_cast<std::uint16_t>(q(g)),
                             static_cast<std::uint16_t>(q(g)), static_cast<std::uint16_t>(q(g)),
                             static_cast<std::uint16_t>(q(g))));
  return out;
}

// A setup with the real geometry but a random reconstructor and NGS matrix,
// scaled small enough that commands stay inside the stroke.
inline std::shared_ptr<mcao::rtc::RtcSetup> random_setup(const mcao::rtc::Geometry& geo, Rng& g) {
  auto s = std::make_shared<mcao::rtc::RtcSetup>();
  s->geometry = geo;
  s->map = mcao::rtc::build_subaperture_map(geo);
  s->dms = mcao::rtc::build_dm_configs(geo);
  const auto blocks = mcao::rtc::partition_sizes(s->dms);
  int rows = 0;
  for (int b : blocks) rows += b;
  const int cols = s->map.slope_count();
  std::normal_distribution<float> n(0.0f, 0.01f);
  std::vector<float> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = n(g);
  s->reconstructor = mcao::rtc::ReconstructorMatrix(rows, cols, std::move(v), blocks);
  if (geo.ngs_count == mcao::rtc::kNgsSensors) {
    s->ngs.mode_shapes = mcao::rtc::make_anisoplanatism_modes(s->dms);
    for (auto& m : s->ngs.matrix) m = n(g) * 10.0f;
  }
  return s;
}

}  // namespace testutil
