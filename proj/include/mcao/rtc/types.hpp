#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mcao/core/timebase.hpp"

namespace mcao::rtc {

inline constexpr int kMaxLgsSensors = 5;
inline constexpr int kFirstNgsSensor = 5;
inline constexpr int kNgsSensors = 3;
inline constexpr int kNgsInputs = 2 * kNgsSensors;
inline constexpr int kNgsOutputs = 5;  // TTM tip, TTM tilt, three anisoplanatism modes
inline constexpr int kAnisoModes = 3;

inline bool is_ngs_sensor(int id) { return id >= kFirstNgsSensor && id < kFirstNgsSensor + kNgsSensors; }

struct WfsFrame {
  std::uint16_t sensor_id = 0;
  std::uint64_t frame_id = 0;
  TimeNs timestamp = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint16_t> pixels;  // row-major, ADU

  std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Interleaved (x, y) slope pairs, one pair per illuminated subaperture, in
// units of the subaperture window width.
using SlopeVector = std::vector<float>;

struct ActuatorVector {
  int dm_id = 0;
  std::vector<float> active;  // normalized stroke
  std::vector<float> full;    // active actuators first, then slaved inactive ones
};

struct StageTimings {
  std::int64_t centroid_ns = 0;
  std::vector<std::int64_t> mvm_ns;  // one per partition
  std::int64_t background_ns = 0;    // NGS loop and optimizer bookkeeping
  std::int64_t control_ns = 0;
  std::int64_t slaving_ns = 0;
};

enum class FrameStatus { kOk, kFrameCoherenceError };

struct FrameResult {
  std::uint64_t frame_id = 0;
  FrameStatus status = FrameStatus::kOk;
  std::string detail;
  StageTimings timing;
  std::int64_t total_latency_ns = 0;
  bool deadline_missed = false;
  std::vector<ActuatorVector> dm;
  std::array<float, 2> ttm{};
  double residual_rms = 0.0;  // RMS of the measured LGS slopes
};

}  // namespace mcao::rtc
