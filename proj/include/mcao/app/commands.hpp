#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcao/core/config.hpp"
#include "mcao/rtc/flops.hpp"

namespace mcao::app {

struct LatencySummary {
  std::int64_t p50 = 0, p95 = 0, p99 = 0, max = 0;
};
LatencySummary summarize_latency(std::vector<std::int64_t> ns);

struct RunReport {
  std::string config_summary;
  std::uint64_t seed = 0;
  std::uint64_t frames = 0;
  double open_residual = 0, closed_residual = 0;  // long-exposure LGS slope RMS
  double open_wfe_nm = 0, closed_wfe_nm = 0;      // field-mean residual WFE
  double field_uniformity = 0;                    // max/min WFE over the corrected field, last frame
  int coherence_errors = 0;
  rtc::FlopBudget flops;
  bool diverged = false;
  // Wall-clock quantities, reported apart from the deterministic part.
  LatencySummary latency;
  int deadline_misses = 0;
};

// Open-loop baseline, then the closed loop, from identical seeds.
RunReport simulate(const Config& cfg, std::uint64_t frames, std::uint64_t seed, int wfe_every = 10);
std::string format_report(const RunReport& r);
std::string format_timing(const RunReport& r);

struct BenchReport {
  std::string config_summary;
  std::uint64_t frames = 0;
  double seconds = 0;
  double fps = 0;
  double target_fps = 800;
  LatencySummary latency;
  LatencySummary centroid, mvm, control;
  int deadline_misses = 0;
  rtc::FlopBudget flops;
};

// Throws UsageError for a non-positive duration.
BenchReport bench(const Config& cfg, double duration_s);
std::string format_bench(const BenchReport& r);

struct SalsaCheckReport {
  std::vector<std::string> lines;
  bool shutter_closed = false;
};

// Replays pointing, window and aircraft files through the safety engine on a
// 10 Hz simulation clock. Monitored scopes are the ones present in the pointing
// feed. Throws ParseError (with line numbers) on malformed input.
SalsaCheckReport salsa_check(const Config& cfg, const std::string& pointing, const std::string& windows,
                             const std::string& events);

std::string geometry_summary(const Config& cfg);

}  // namespace mcao::app
