#include "mcao/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mcao/app/closed_loop.hpp"
#include "mcao/core/errors.hpp"
#include "mcao/core/rng.hpp"
#include "mcao/salsa/safety.hpp"

namespace mcao::app {

LatencySummary summarize_latency(std::vector<std::int64_t> ns) {
  LatencySummary s;
  if (ns.empty()) return s;
  std::sort(ns.begin(), ns.end());
  // Nearest rank.
  auto pct = [&](double p) {
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(ns.size())));
    return ns[std::clamp<std::size_t>(rank, 1, ns.size()) - 1];
  };
  s.p50 = pct(50);
  s.p95 = pct(95);
  s.p99 = pct(99);
  s.max = ns.back();
  return s;
}

std::string geometry_summary(const Config& cfg) {
  const auto g = rtc::Geometry::from_config(cfg);
  return fmt::format("lgs={} subapertures={} dms={} active={} inactive={} ngs={} rate_hz={:g}", g.lgs_count,
                     g.subapertures_total, g.dms.size(), g.active_total(), g.inactive_total(), g.ngs_count,
                     g.frame_rate_hz);
}

namespace {

sim::SimConfig sim_config(const Config& cfg, std::uint64_t seed) {
  auto sc = sim::SimConfig::from_config(cfg);
  sc.atmosphere.seed = seed;
  sc.noise_seed = derive_seed(seed, {0x6e6f697365});
  return sc;
}

std::string flops_lines(const rtc::FlopBudget& f) {
  std::string out = fmt::format("flops_convention {}\nflops_lgs_total {:.6e}\n", f.convention, f.lgs_flops_per_second);
  for (const auto& t : f.lgs_terms) out += fmt::format("flops_lgs_{} {:.6e}\n", t.name, t.flops_per_second);
  out += fmt::format("flops_ngs_total {:.6e}\n", f.ngs_flops_per_second);
  for (const auto& t : f.ngs_terms) out += fmt::format("flops_ngs_{} {:.6e}\n", t.name, t.flops_per_second);
  return out;
}

std::string latency_line(const char* name, const LatencySummary& l) {
  return fmt::format("{}_ns p50={} p95={} p99={} max={}\n", name, l.p50, l.p95, l.p99, l.max);
}

}  // namespace

RunReport simulate(const Config& cfg, std::uint64_t frames, std::uint64_t seed, int wfe_every) {
  if (frames == 0) throw UsageError("frames must be positive");
  RunReport r;
  const auto sc = sim_config(cfg, seed);
  r.config_summary = geometry_summary(cfg) +
                     fmt::format(" turbulence={} r0_m={:g} static_aberration_nm={:g} noise={}",
                                 sc.atmosphere.enabled ? "on" : "off", sc.atmosphere.r0_m, sc.static_aberration_nm,
                                 sc.lgs_sensor.noise ? "on" : "off");
  r.seed = seed;
  r.frames = frames;
  sim::Simulator sim(sc);
  const auto setup = build_rtc_setup(sim, SetupOptions::from_config(cfg));
  const auto po = rtc::PipelineOptions::from_config(cfg, sc.lgs_sensor.read_noise_adu);
  r.flops = rtc::estimate_flops(setup->geometry);

  LoopRun run;
  run.frames = frames;
  run.wfe_every = wfe_every;
  {
    rtc::Pipeline open(setup, po);
    sim.clear_commands();
    run.closed = false;
    const auto st = run_loop(sim, open, run);
    r.open_residual = st.mean_residual();
    r.open_wfe_nm = st.mean_wfe();
  }
  rtc::Pipeline closed(setup, po);
  sim.clear_commands();
  run.closed = true;
  const auto st = run_loop(sim, closed, run);
  r.closed_residual = st.mean_residual();
  r.closed_wfe_nm = st.mean_wfe();
  r.coherence_errors = st.coherence_errors;
  r.deadline_misses = st.deadline_misses;
  r.latency = summarize_latency(st.latency_ns);
  const auto field = sim::Simulator::field_grid(sc.stars.field_half_width_arcsec * 25.0 / 30.0, 3);
  r.field_uniformity =
      sim.field_rms_wfe(field, static_cast<double>(frames) / sc.geometry.frame_rate_hz).uniformity;
  r.diverged = !std::isfinite(r.closed_residual) || r.closed_residual > 10.0 * r.open_residual;
  return r;
}

std::string format_report(const RunReport& r) {
  std::string s = "report simulate\n";
  s += fmt::format("config {}\nseed {}\nframes {}\n", r.config_summary, r.seed, r.frames);
  s += fmt::format("open_residual_slope_rms {:.6e}\nclosed_residual_slope_rms {:.6e}\n", r.open_residual,
                   r.closed_residual);
  s += fmt::format("residual_ratio {:.6f}\n", r.open_residual > 0 ? r.closed_residual / r.open_residual : 0.0);
  s += fmt::format("open_wfe_nm {:.3f}\nclosed_wfe_nm {:.3f}\n", r.open_wfe_nm, r.closed_wfe_nm);
  s += fmt::format("field_uniformity {:.4f}\n", r.field_uniformity);
  s += fmt::format("coherence_errors {}\n", r.coherence_errors);
  s += flops_lines(r.flops);
  s += fmt::format("status {}\n", r.diverged ? "diverged" : "ok");
  return s;
}

std::string format_timing(const RunReport& r) {
  return latency_line("latency", r.latency) + fmt::format("deadline_misses {} of {}\n", r.deadline_misses, r.frames);
}

BenchReport bench(const Config& cfg, double duration_s) {
  if (!(duration_s > 0)) throw UsageError("duration must be positive");
  BenchReport b;
  b.config_summary = geometry_summary(cfg);
  const auto sc = sim_config(cfg, 1);
  sim::Simulator sim(sc);
  const auto setup = build_rtc_setup(sim, SetupOptions::from_config(cfg));
  const auto po = rtc::PipelineOptions::from_config(cfg, sc.lgs_sensor.read_noise_adu);
  b.flops = rtc::estimate_flops(setup->geometry);
  b.target_fps = setup->geometry.frame_rate_hz;
  rtc::Pipeline pipe(setup, po);
  pipe.set_loops_closed(true);
  auto frames = sim.render(1);

  std::vector<std::int64_t> lat, cen, mvm, ctl;
  const auto start = std::chrono::steady_clock::now();
  const auto limit = std::chrono::duration<double>(duration_s);
  std::uint64_t id = 1;
  for (;;) {
    for (auto& f : frames) f.frame_id = id;
    const auto res = pipe.run_frame(frames);
    lat.push_back(res.total_latency_ns);
    cen.push_back(res.timing.centroid_ns);
    mvm.push_back(res.timing.mvm_ns.empty() ? 0 : *std::max_element(res.timing.mvm_ns.begin(), res.timing.mvm_ns.end()));
    ctl.push_back(res.timing.control_ns);
    if (res.deadline_missed) ++b.deadline_misses;
    ++id;
    if (std::chrono::steady_clock::now() - start >= limit) break;
  }
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  b.frames = lat.size();
  b.fps = static_cast<double>(b.frames) / b.seconds;
  b.latency = summarize_latency(lat);
  b.centroid = summarize_latency(cen);
  b.mvm = summarize_latency(mvm);
  b.control = summarize_latency(ctl);
  return b;
}

std::string format_bench(const BenchReport& b) {
  std::string s = "report bench\n";
  s += fmt::format("config {}\nframes {}\nseconds {:.3f}\n", b.config_summary, b.frames, b.seconds);
  s += fmt::format("fps {:.1f}\ntarget_fps {:g}\ntarget_met {}\n", b.fps, b.target_fps,
                   b.fps >= b.target_fps ? "yes" : "no");
  s += latency_line("latency", b.latency) + latency_line("stage_centroid", b.centroid) +
       latency_line("stage_mvm", b.mvm) + latency_line("stage_control", b.control);
  s += fmt::format("deadline_misses {}\n", b.deadline_misses);
  s += flops_lines(b.flops);
  return s;
}

namespace {

template <class F>
void for_each_record(const std::string& text, F&& f) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    f(line.substr(b), n);
  }
}

}  // namespace

SalsaCheckReport salsa_check(const Config& cfg, const std::string& pointing, const std::string& windows,
                             const std::string& events) {
  auto sc = salsa::SalsaConfig::from_config(cfg);
  std::vector<std::pair<salsa::PointingRecord, int>> recs;
  for_each_record(pointing, [&](const std::string& l, int n) { recs.emplace_back(salsa::parse_pointing_record(l, n), n); });
  std::vector<salsa::AircraftEvent> evts;
  for_each_record(events, [&](const std::string& l, int n) { evts.push_back(salsa::parse_aircraft_record(l, n)); });
  const auto wins = salsa::normalize_windows(salsa::parse_window_file(windows));

  std::map<std::string, salsa::Vec3> sites;
  for (const auto& [r, n] : recs) {
    auto it = sc.sites.find(r.scope_id);
    if (it == sc.sites.end()) throw ParseError("unknown scope '" + r.scope_id + "'", n);
    sites[r.scope_id] = it->second;
  }
  sc.sites = sites;

  SalsaCheckReport rep;
  std::string scopes;
  for (const auto& [id, p] : sites) scopes += " " + id;
  rep.lines.push_back("salsa-check laser=" + sc.laser_scope + " scopes=" + (scopes.empty() ? "-" : scopes.substr(1)));

  std::vector<TimeNs> times;
  for (const auto& [r, n] : recs) times.push_back(r.timestamp);
  for (const auto& e : evts) times.push_back(e.timestamp);
  for (const auto& w : wins) times.insert(times.end(), {w.start, w.end});
  if (times.empty()) {
    rep.lines.push_back("result shutter_never_closed");
    return rep;
  }
  const TimeNs t0 = *std::min_element(times.begin(), times.end());
  const TimeNs t_end = *std::max_element(times.begin(), times.end()) + kNsPerSecond;

  salsa::SafetyEngine eng(sc);
  eng.set_windows(wins);
  eng.on_change = [&](const salsa::HazardState& h, TimeNs t) {
    std::string causes;
    for (const auto& c : h.causes) causes += (causes.empty() ? "" : ",") + c;
    rep.lines.push_back(fmt::format("shutter {} {}{}{}", format_iso8601(t), salsa::to_string(h.shutter),
                                    causes.empty() ? "" : " ", causes));
    if (h.shutter == salsa::Shutter::Closed) rep.shutter_closed = true;
  };

  std::vector<std::size_t> rec_order(recs.size()), evt_order(evts.size());
  for (std::size_t i = 0; i < rec_order.size(); ++i) rec_order[i] = i;
  for (std::size_t i = 0; i < evt_order.size(); ++i) evt_order[i] = i;
  std::stable_sort(rec_order.begin(), rec_order.end(),
                   [&](auto a, auto b) { return recs[a].first.timestamp < recs[b].first.timestamp; });
  std::stable_sort(evt_order.begin(), evt_order.end(),
                   [&](auto a, auto b) { return evts[a].timestamp < evts[b].timestamp; });

  std::size_t ri = 0, ei = 0, warned = 0;
  std::size_t rejected = 0;
  const TimeNs step = sc.cadence_ns();
  for (TimeNs t = t0; t <= t_end; t += step) {
    bool updated = false;
    for (; ri < rec_order.size() && recs[rec_order[ri]].first.timestamp <= t; ++ri) {
      if (eng.ingest_pointing(recs[rec_order[ri]].first) == salsa::IngestStatus::Accepted)
        updated = true;
      else
        ++rejected;
    }
    for (; ei < evt_order.size() && evts[evt_order[ei]].timestamp <= t; ++ei) eng.post_event(evts[evt_order[ei]]);
    if (updated)
      for (const auto& c : eng.collisions(t))
        rep.lines.push_back(fmt::format("margin {} {} {:.9f} {}", format_iso8601(t), c.scope_id, c.min_margin_deg,
                                        c.collides ? "COLLIDES" : "clear"));
    eng.step(t);
    const auto& w = eng.warnings();
    for (; warned < w.size(); ++warned)
      rep.lines.push_back(fmt::format("warning {} {} {}", format_iso8601(w[warned].t), salsa::to_string(w[warned].tier),
                                      salsa::to_string(w[warned].action)));
  }
  rep.lines.push_back(fmt::format("records accepted={} rejected={}", recs.size() - rejected, rejected));
  rep.lines.push_back(rep.shutter_closed ? "result shutter_closed" : "result shutter_never_closed");
  return rep;
}

}  // namespace mcao::app
