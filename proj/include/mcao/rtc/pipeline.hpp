#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcao/core/config.hpp"
#include "mcao/rtc/centroid.hpp"
#include "mcao/rtc/control.hpp"
#include "mcao/rtc/gain_optimizer.hpp"
#include "mcao/rtc/geometry.hpp"
#include "mcao/rtc/ngs.hpp"
#include "mcao/rtc/offload.hpp"
#include "mcao/rtc/reconstructor.hpp"
#include "mcao/rtc/types.hpp"

namespace mcao::rtc {

inline constexpr std::int64_t kFrameDeadlineNs = 1'250'000;  // one frame at 800 Hz

// Everything the pipeline needs that is fixed at configuration load.
struct RtcSetup {
  Geometry geometry;
  SubapertureMap map;
  std::vector<DmConfig> dms;
  ReconstructorMatrix reconstructor;
  NgsState ngs;  // matrix and mode shapes; integrator state is copied per pipeline
};

struct PipelineOptions {
  CentroidParams centroid;
  float gain = 0.5f;
  float leak = 0.01f;
  float ttm_gain = 0.4f;
  float ttm_leak = 0.01f;
  float ngs_mode_gain = 0.3f;
  float ngs_mode_leak = 0.01f;
  float ttm_stroke = 1.0f;
  bool parallel = true;
  bool replicate_centroids = false;  // each partition worker recomputes all centroids
  std::int64_t deadline_ns = kFrameDeadlineNs;
  bool optimize_gains = false;
  GainOptimizerOptions optimizer = GainOptimizerOptions::defaults();
  int optimizer_apply_lag = 32;  // frames between a window closing and its gains applying
  int offload_window = 16;

  // Reads the [rtc] section. The default centroid threshold is three times
  // the read noise.
  static PipelineOptions from_config(const Config& cfg, double read_noise_adu);
};

// Fixed pool executing one task per worker and waiting for all of them.
// With parallel = false the tasks run inline, in order, on the caller.
class StageExecutor {
 public:
  StageExecutor(int workers, bool parallel);
  ~StageExecutor();
  StageExecutor(const StageExecutor&) = delete;
  StageExecutor& operator=(const StageExecutor&) = delete;

  void set_tasks(std::vector<std::function<void()>> tasks);
  void run();
  bool parallel() const { return parallel_; }

 private:
  struct Shared;
  void worker_main(int index);

  bool parallel_;
  std::vector<std::function<void()>> tasks_;
  std::unique_ptr<Shared> shared_;
};

// The real-time frame pipeline: centroids once, fans the slope vector out to
// one MVM worker per DM plus one background worker (NGS loop, optimizer
// bookkeeping), merges in dm_id order, then applies the control law and slaving.
class Pipeline {
 public:
  Pipeline(std::shared_ptr<const RtcSetup> setup, PipelineOptions options);
  ~Pipeline();

  FrameResult run_frame(std::span<const WfsFrame> frames);

  void set_loops_closed(bool closed);
  bool loops_closed() const { return closed_; }

  const ControlState& control() const { return control_; }
  const NgsState& ngs() const { return ngs_; }
  const RtcSetup& setup() const { return *setup_; }
  const PipelineOptions& options() const { return options_; }
  std::array<float, 2> offload() const { return offload_.value(); }

  // Receives log events (missing frames, gain changes).
  void set_event_sink(std::function<void(const std::string&)> sink) { event_sink_ = std::move(sink); }
  void set_offload_sink(std::function<void(std::uint64_t, const std::array<float, 2>&)> sink) {
    offload_sink_ = std::move(sink);
  }
  const std::deque<std::string>& events() const { return events_; }
  int gain_updates() const { return gain_updates_; }

 private:
  void validate_frames(std::span<const WfsFrame> frames);
  void partition_task(int dm);
  void background_task();
  void record_optimizer_window();
  void maybe_apply_gains();
  void log(std::string message);
  FrameResult held_result(std::uint64_t frame_id, std::string detail) const;

  std::shared_ptr<const RtcSetup> setup_;
  PipelineOptions options_;
  ControlState control_;
  NgsState ngs_;
  OffloadExporter offload_;
  bool closed_ = false;

  // Per-frame working buffers.
  std::vector<const WfsFrame*> lgs_frames_;
  std::vector<const WfsFrame*> ngs_frames_;
  std::vector<WfsFrame> ngs_scratch_;
  std::vector<float> slopes_;
  std::vector<std::vector<float>> replica_slopes_;
  std::vector<std::vector<float>> increments_;
  std::vector<std::int64_t> mvm_ns_;
  std::int64_t background_ns_ = 0;
  NgsOutput ngs_out_;
  bool ngs_ran_ = false;
  std::exception_ptr background_error_;
  std::vector<std::vector<float>> dm_active_;
  std::uint64_t frame_counter_ = 0;

  // Optimizer history: pseudo open-loop commands of the previous frame are
  // recorded by the next frame's background task.
  std::vector<std::vector<float>> prev_pseudo_open_loop_;
  std::vector<std::vector<float>> prev_integrator_;
  bool prev_valid_ = false;
  std::vector<std::vector<std::vector<float>>> window_;  // [dm][frame][actuator]
  std::vector<std::vector<float>> window_start_;
  struct PendingGains {
    std::uint64_t apply_at = 0;
    std::future<std::vector<float>> gains;
  };
  std::deque<PendingGains> pending_;
  int gain_updates_ = 0;

  FrameResult last_;
  std::unique_ptr<StageExecutor> executor_;

  std::function<void(const std::string&)> event_sink_;
  std::function<void(std::uint64_t, const std::array<float, 2>&)> offload_sink_;
  std::deque<std::string> events_;
};

}  // namespace mcao::rtc
