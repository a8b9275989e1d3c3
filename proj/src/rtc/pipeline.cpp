#include "mcao/rtc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "mcao/core/errors.hpp"
#include "mcao/rtc/slaving.hpp"

namespace mcao::rtc {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

constexpr std::size_t kMaxEvents = 1024;

}  // namespace

PipelineOptions PipelineOptions::from_config(const Config& cfg, double read_noise_adu) {
  PipelineOptions o;
  const long long thr = cfg.get_int("rtc.centroid_threshold", std::llround(3.0 * read_noise_adu));
  if (thr < 0 || thr > 65535) throw ConfigError("rtc.centroid_threshold must be in 0..65535");
  o.centroid.threshold = static_cast<std::uint16_t>(thr);
  o.centroid.gain = static_cast<float>(cfg.get_double("rtc.centroid_gain", o.centroid.gain));
  o.gain = static_cast<float>(cfg.get_double("rtc.gain", o.gain));
  o.leak = static_cast<float>(cfg.get_double("rtc.leak", o.leak));
  o.ttm_gain = static_cast<float>(cfg.get_double("rtc.ttm_gain", o.ttm_gain));
  o.ttm_leak = static_cast<float>(cfg.get_double("rtc.ttm_leak", o.ttm_leak));
  o.ngs_mode_gain = static_cast<float>(cfg.get_double("rtc.ngs_mode_gain", o.ngs_mode_gain));
  o.ngs_mode_leak = static_cast<float>(cfg.get_double("rtc.ngs_mode_leak", o.ngs_mode_leak));
  o.ttm_stroke = static_cast<float>(cfg.get_double("rtc.ttm_stroke", o.ttm_stroke));
  o.parallel = cfg.get_bool("rtc.parallel", o.parallel);
  o.replicate_centroids = cfg.get_bool("rtc.replicate_centroids", o.replicate_centroids);
  o.optimize_gains = cfg.get_bool("rtc.optimize_gains", o.optimize_gains);
  o.optimizer.window = static_cast<int>(cfg.get_int("rtc.optimizer_window", o.optimizer.window));
  o.optimizer.g_min = cfg.get_double("rtc.gain_min", o.optimizer.g_min);
  o.optimizer.g_max = cfg.get_double("rtc.gain_max", o.optimizer.g_max);
  o.optimizer_apply_lag = static_cast<int>(cfg.get_int("rtc.optimizer_apply_lag", o.optimizer_apply_lag));
  o.offload_window = static_cast<int>(cfg.get_int("rtc.offload_window", o.offload_window));
  for (float leak : {o.leak, o.ttm_leak, o.ngs_mode_leak})
    if (!(leak >= 0.0f && leak <= 1.0f)) throw ConfigError("loop leaks must lie in [0, 1]");
  if (o.optimizer_apply_lag < 0) throw ConfigError("rtc.optimizer_apply_lag must be non-negative");
  if (o.offload_window <= 0) throw ConfigError("rtc.offload_window must be positive");
  return o;
}

// ---------------------------------------------------------------------------

struct StageExecutor::Shared {
  std::mutex mu;
  std::condition_variable start;
  std::condition_variable done;
  std::uint64_t generation = 0;
  int remaining = 0;
  bool stop = false;
  std::vector<std::thread> threads;
};

StageExecutor::StageExecutor(int workers, bool parallel) : parallel_(parallel), shared_(std::make_unique<Shared>()) {
  if (workers < 1) throw UsageError("executor needs at least one worker");
  if (!parallel_) return;
  // The calling thread runs task 0 itself.
  for (int i = 1; i < workers; ++i) shared_->threads.emplace_back([this, i] { worker_main(i); });
}

StageExecutor::~StageExecutor() {
  {
    std::lock_guard lock(shared_->mu);
    shared_->stop = true;
  }
  shared_->start.notify_all();
  for (auto& t : shared_->threads) t.join();
}

void StageExecutor::set_tasks(std::vector<std::function<void()>> tasks) {
  if (parallel_ && tasks.size() != shared_->threads.size() + 1)
    throw UsageError("task count does not match the worker count");
  tasks_ = std::move(tasks);
}

void StageExecutor::run() {
  if (!parallel_ || tasks_.size() == 1) {
    for (auto& t : tasks_) t();
    return;
  }
  {
    std::lock_guard lock(shared_->mu);
    shared_->remaining = static_cast<int>(shared_->threads.size());
    ++shared_->generation;
  }
  shared_->start.notify_all();
  tasks_[0]();
  std::unique_lock lock(shared_->mu);
  shared_->done.wait(lock, [&] { return shared_->remaining == 0; });
}

void StageExecutor::worker_main(int index) {
  std::uint64_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(shared_->mu);
      shared_->start.wait(lock, [&] { return shared_->stop || shared_->generation != seen; });
      if (shared_->stop) return;
      seen = shared_->generation;
    }
    tasks_[index]();
    {
      std::lock_guard lock(shared_->mu);
      if (--shared_->remaining == 0) shared_->done.notify_one();
    }
  }
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(std::shared_ptr<const RtcSetup> setup, PipelineOptions options)
    : setup_(std::move(setup)), options_(std::move(options)), offload_(static_cast<std::size_t>(options_.offload_window)) {
  const RtcSetup& s = *setup_;
  const int n_dm = static_cast<int>(s.dms.size());
  if (s.reconstructor.partitions() != n_dm) throw ConfigError("reconstructor partitions do not match the DM count");
  for (int d = 0; d < n_dm; ++d) {
    const auto [b, e] = s.reconstructor.block_rows(d);
    if (e - b != s.dms[d].active_count)
      throw ConfigError("reconstructor block " + std::to_string(d) + " has " + std::to_string(e - b) +
                        " rows, DM has " + std::to_string(s.dms[d].active_count) + " active actuators");
  }
  if (s.reconstructor.cols() != s.map.slope_count())
    throw ConfigError("reconstructor has " + std::to_string(s.reconstructor.cols()) + " columns, map has " +
                      std::to_string(s.map.slope_count()) + " slopes");

  for (const auto& dm : s.dms) control_.dm.push_back(make_loop(dm.active_count, options_.gain, options_.leak, dm.stroke));
  control_.ttm = make_loop(2, options_.ttm_gain, options_.ttm_leak, options_.ttm_stroke);
  ngs_ = s.ngs;
  ngs_.modes = make_loop(kAnisoModes, options_.ngs_mode_gain, options_.ngs_mode_leak, 1.0f);

  slopes_.assign(static_cast<std::size_t>(s.map.slope_count()), 0.0f);
  if (options_.replicate_centroids) replica_slopes_.assign(n_dm, slopes_);
  increments_.resize(n_dm);
  dm_active_.resize(n_dm);
  for (int d = 0; d < n_dm; ++d) {
    increments_[d].assign(static_cast<std::size_t>(s.dms[d].active_count), 0.0f);
    dm_active_[d].assign(static_cast<std::size_t>(s.dms[d].active_count), 0.0f);
  }
  mvm_ns_.assign(n_dm, 0);
  prev_pseudo_open_loop_.resize(n_dm);
  prev_integrator_.resize(n_dm);
  window_.resize(n_dm);
  window_start_.resize(n_dm);

  last_.frame_id = 0;
  for (const auto& dm : s.dms) last_.dm.push_back(slave_inactive(std::vector<float>(dm.active_count, 0.0f), dm));
  last_.timing.mvm_ns.assign(n_dm, 0);

  std::vector<std::function<void()>> tasks;
  for (int d = 0; d < n_dm; ++d) tasks.emplace_back([this, d] { partition_task(d); });
  tasks.emplace_back([this] { background_task(); });
  executor_ = std::make_unique<StageExecutor>(n_dm + 1, options_.parallel);
  executor_->set_tasks(std::move(tasks));
}

Pipeline::~Pipeline() {
  for (auto& p : pending_)
    if (p.gains.valid()) p.gains.wait();
}

void Pipeline::set_loops_closed(bool closed) {
  closed_ = closed;
  for (auto& l : control_.dm) l.closed = closed;
  control_.ttm.closed = closed;
  ngs_.modes.closed = closed;
  if (!closed) {
    prev_valid_ = false;
    for (auto& w : window_) w.clear();
  }
}

void Pipeline::log(std::string message) {
  if (event_sink_) event_sink_(message);
  events_.push_back(std::move(message));
  if (events_.size() > kMaxEvents) events_.pop_front();
}

FrameResult Pipeline::held_result(std::uint64_t frame_id, std::string detail) const {
  FrameResult r = last_;
  r.frame_id = frame_id;
  r.status = FrameStatus::kFrameCoherenceError;
  r.detail = std::move(detail);
  r.timing = StageTimings{};
  r.timing.mvm_ns.assign(setup_->dms.size(), 0);
  return r;
}

void Pipeline::validate_frames(std::span<const WfsFrame> frames) {
  const RtcSetup& s = *setup_;
  const int n_lgs = s.geometry.lgs_count;
  const int n_ngs = s.geometry.ngs_count;
  lgs_frames_.assign(static_cast<std::size_t>(n_lgs), nullptr);
  ngs_frames_.assign(static_cast<std::size_t>(n_ngs), nullptr);
  if (frames.empty()) throw FrameCoherenceError("no frames");
  const std::uint64_t id = frames[0].frame_id;
  for (const WfsFrame& f : frames) {
    if (f.frame_id != id)
      throw FrameCoherenceError("frame ids disagree (" + std::to_string(id) + " vs " + std::to_string(f.frame_id) + ")");
    const WfsFrame** slot = nullptr;
    if (f.sensor_id < n_lgs) slot = &lgs_frames_[f.sensor_id];
    else if (is_ngs_sensor(f.sensor_id) && f.sensor_id - kFirstNgsSensor < n_ngs)
      slot = &ngs_frames_[f.sensor_id - kFirstNgsSensor];
    else
      throw FrameCoherenceError("unexpected sensor " + std::to_string(f.sensor_id));
    if (*slot) throw FrameCoherenceError("duplicate frame from sensor " + std::to_string(f.sensor_id));
    *slot = &f;
  }
  for (int i = 0; i < n_lgs; ++i)
    if (!lgs_frames_[i]) throw FrameCoherenceError("missing frame from sensor " + std::to_string(i));
  for (int i = 0; i < n_ngs; ++i)
    if (!ngs_frames_[i]) throw FrameCoherenceError("missing frame from sensor " + std::to_string(kFirstNgsSensor + i));
  if (frame_counter_ > 0 && id <= last_.frame_id)
    throw FrameCoherenceError("frame id " + std::to_string(id) + " does not advance past " +
                              std::to_string(last_.frame_id));
  for (const WfsFrame* f : lgs_frames_) {
    const SensorLayout& l = s.map.sensor(f->sensor_id);
    if (f->width != l.width || f->height != l.height || f->pixels.size() != std::size_t(f->width) * f->height)
      throw ConfigError("frame of sensor " + std::to_string(f->sensor_id) + " does not match its layout");
  }
}

void Pipeline::partition_task(int dm) {
  const auto t0 = Clock::now();
  std::span<const float> slopes = slopes_;
  if (options_.replicate_centroids) {
    for (const WfsFrame* f : lgs_frames_)
      compute_centroids_into(*f, setup_->map, options_.centroid, replica_slopes_[dm]);
    slopes = replica_slopes_[dm];
  }
  reconstruct_partition(slopes, setup_->reconstructor, dm, increments_[dm]);
  mvm_ns_[dm] = elapsed_ns(t0);
}

void Pipeline::background_task() {
  const auto t0 = Clock::now();
  try {
    if (!ngs_frames_.empty()) {
      ngs_scratch_.resize(ngs_frames_.size());
      for (std::size_t i = 0; i < ngs_frames_.size(); ++i) ngs_scratch_[i] = *ngs_frames_[i];
      ngs_update(ngs_scratch_, ngs_, control_.ttm, ngs_out_);
      ngs_ran_ = true;
    }
    if (options_.optimize_gains && closed_) record_optimizer_window();
  } catch (...) {
    background_error_ = std::current_exception();
  }
  background_ns_ = elapsed_ns(t0);
}

void Pipeline::record_optimizer_window() {
  if (!prev_valid_) return;
  const std::size_t n_dm = window_.size();
  for (std::size_t d = 0; d < n_dm; ++d) {
    if (window_[d].empty()) window_start_[d] = prev_integrator_[d];
    window_[d].push_back(prev_pseudo_open_loop_[d]);
  }
  if (static_cast<int>(window_[0].size()) < options_.optimizer.window) return;

  std::vector<double> gains, leaks, strokes;
  for (const auto& l : control_.dm) {
    gains.push_back(l.gain);
    leaks.push_back(l.leak);
    strokes.push_back(l.stroke);
  }
  auto job = [opts = options_.optimizer, window = std::move(window_), start = std::move(window_start_),
              gains, leaks, strokes]() {
    GainOptimizer opt(opts);
    std::vector<float> out;
    for (std::size_t d = 0; d < window.size(); ++d) {
      const auto residual = [&](double g) { return replay_residual(window[d], start[d], g, leaks[d], strokes[d]); };
      out.push_back(static_cast<float>(opt.update(gains[d], residual)));
    }
    return out;
  };
  pending_.push_back({frame_counter_ + static_cast<std::uint64_t>(options_.optimizer_apply_lag),
                      std::async(std::launch::async, std::move(job))});
  window_.assign(n_dm, {});
  window_start_.assign(n_dm, {});
}

void Pipeline::maybe_apply_gains() {
  while (!pending_.empty() && pending_.front().apply_at <= frame_counter_) {
    const std::vector<float> gains = pending_.front().gains.get();
    pending_.pop_front();
    std::string msg = "gains updated:";
    for (std::size_t d = 0; d < gains.size() && d < control_.dm.size(); ++d) {
      control_.dm[d].gain = gains[d];
      msg += " dm" + std::to_string(d) + "=" + std::to_string(gains[d]);
    }
    ++gain_updates_;
    log(std::move(msg));
  }
}

FrameResult Pipeline::run_frame(std::span<const WfsFrame> frames) {
  const auto t0 = Clock::now();
  const std::uint64_t frame_id = frames.empty() ? last_.frame_id : frames[0].frame_id;
  try {
    validate_frames(frames);
  } catch (const FrameCoherenceError& e) {
    log("frame " + std::to_string(frame_id) + ": " + e.what() + "; commands held");
    FrameResult r = held_result(frame_id, e.what());
    r.total_latency_ns = elapsed_ns(t0);
    r.deadline_missed = r.total_latency_ns > options_.deadline_ns;
    return r;
  }
  maybe_apply_gains();

  const RtcSetup& s = *setup_;
  const std::size_t n_dm = s.dms.size();
  FrameResult r;
  r.frame_id = frame_id;

  auto t = Clock::now();
  if (!options_.replicate_centroids)
    for (const WfsFrame* f : lgs_frames_) compute_centroids_into(*f, s.map, options_.centroid, slopes_);
  r.timing.centroid_ns = elapsed_ns(t);

  ngs_ran_ = false;
  background_error_ = nullptr;
  executor_->run();
  if (background_error_) std::rethrow_exception(background_error_);
  if (options_.replicate_centroids && n_dm > 0) slopes_ = replica_slopes_[0];

  // Merge in dm order.
  t = Clock::now();
  const bool track = options_.optimize_gains && closed_;
  for (std::size_t d = 0; d < n_dm; ++d) {
    if (track) {
      auto& u = prev_pseudo_open_loop_[d];
      const auto& c = control_.dm[d].integrator;
      u.resize(c.size());
      prev_integrator_[d] = c;
      for (std::size_t i = 0; i < c.size(); ++i) u[i] = increments_[d][i] + c[i];
    }
    const auto c = apply_control_law(control_.dm[d], increments_[d]);
    dm_active_[d].assign(c.begin(), c.end());
  }
  prev_valid_ = track;
  r.timing.control_ns = elapsed_ns(t);

  t = Clock::now();
  r.dm.resize(n_dm);
  for (std::size_t d = 0; d < n_dm; ++d) {
    const DmConfig& dm = s.dms[d];
    ActuatorVector& out = r.dm[d];
    out.dm_id = dm.dm_id;
    out.full.resize(static_cast<std::size_t>(dm.total_count()));
    slave_inactive(dm_active_[d], dm, out.full);
    if (ngs_ran_ && d < ngs_out_.dm_offsets.size() && !ngs_out_.dm_offsets[d].empty()) {
      std::vector<float> off(out.full.size());
      slave_inactive(ngs_out_.dm_offsets[d], dm, off);
      for (std::size_t i = 0; i < off.size(); ++i) out.full[i] = std::clamp(out.full[i] + off[i], -dm.stroke, dm.stroke);
    }
    out.active.assign(out.full.begin(), out.full.begin() + dm.active_count);
  }
  r.timing.slaving_ns = elapsed_ns(t);

  r.ttm = {control_.ttm.integrator[0], control_.ttm.integrator[1]};
  r.timing.mvm_ns = mvm_ns_;
  r.timing.background_ns = background_ns_;

  double sum2 = 0.0;
  for (float v : slopes_) sum2 += static_cast<double>(v) * v;
  r.residual_rms = slopes_.empty() ? 0.0 : std::sqrt(sum2 / static_cast<double>(slopes_.size()));

  if (closed_) {
    offload_.push(r.ttm);
    if (offload_sink_) offload_sink_(frame_id, offload_.value());
  }

  ++frame_counter_;
  r.total_latency_ns = elapsed_ns(t0);
  r.deadline_missed = r.total_latency_ns > options_.deadline_ns;
  last_ = r;
  return r;
}

}  // namespace mcao::rtc
