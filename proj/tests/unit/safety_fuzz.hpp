#pragma once

// Randomized hazard sequences replayed against an independent bookkeeping
// oracle. Shared by the unit suite and the acceptance run.

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mcao/salsa/safety.hpp"

namespace testutil {

struct SafetyFuzzTally {
  long sequences = 0, steps = 0, rearms = 0, rearms_accepted = 0, ir_events = 0;
  long open_with_hazard = 0;  // shutter OPEN while a hazard is current or latched
  long stale_open = 0;        // shutter OPEN while a feed is stale
  long ir_not_closed = 0;     // IR event did not close the shutter before the next step
  long rearm_mismatch = 0;    // rearm verdict differs from the oracle
  long oracle_mismatch = 0;   // current or latched flags differ from the oracle
  std::string first_failure;

  long failures() const { return open_with_hazard + stale_open + ir_not_closed + rearm_mismatch + oracle_mismatch; }
};

inline constexpr double kFuzzLaserAz = 0, kFuzzLaserEl = 60;

inline mcao::salsa::SalsaConfig fuzz_salsa_config() {
  mcao::salsa::SalsaConfig c;
  c.sites = {{"lgs", {0, 0, 0}}, {"scope_a", {420, -150, 12}}};
  c.stale_after_s = 0.5;
  c.ir_hold_s = 0.3;
  return c;
}

// Azimuth and elevation that point scope_a at the beam 10 km up its length.
inline std::pair<double, double> fuzz_on_beam_azel() {
  using namespace mcao::salsa;
  const Vec3 p = 10'000.0 * direction_from_azel(kFuzzLaserAz, kFuzzLaserEl) - Vec3(420, -150, 12);
  const Vec3 d = p.normalized();
  return {rad2deg(std::atan2(d.x(), d.y())), rad2deg(std::asin(d.z()))};
}

inline SafetyFuzzTally run_safety_fuzz(std::uint64_t seed, long sequences) {
  using namespace mcao;
  using namespace mcao::salsa;
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0, 1);
  const auto cfg = fuzz_salsa_config();
  const TimeNs cadence = cfg.cadence_ns();
  const TimeNs stale_after = seconds_to_ns(cfg.stale_after_s);
  const TimeNs ir_hold = seconds_to_ns(cfg.ir_hold_s);
  const auto [on_az, on_el] = fuzz_on_beam_azel();
  SafetyFuzzTally t;

  auto fail = [&](long& counter, const std::string& what, long seq, TimeNs now) {
    ++counter;
    if (t.first_failure.empty())
      t.first_failure = what + " (sequence " + std::to_string(seq) + ", t=" + std::to_string(now) + " ns)";
  };

  for (long seq = 0; seq < sequences; ++seq) {
    ++t.sequences;
    SafetyEngine eng(cfg);
    std::optional<TimeNs> laser_ts, scope_ts;
    bool on_beam = false;
    std::vector<ClosureWindow> windows;
    std::optional<TimeNs> last_ir;
    HazardFlags latched;
    TimeNs now = 0;

    auto expected = [&](TimeNs at) {
      HazardFlags f;
      const bool laser_fresh = laser_ts && at - *laser_ts <= stale_after;
      const bool scope_fresh = scope_ts && at - *scope_ts <= stale_after;
      f.feed_stale = !laser_fresh || !scope_fresh;
      f.beam_collision = laser_fresh && scope_fresh && on_beam;
      for (const auto& w : windows)
        if (w.start <= at && at <= w.end) f.satellite_window = true;
      f.ir_detection = last_ir && *last_ir <= at && at - *last_ir < ir_hold;
      return f;
    };

    const int ops = 1 + static_cast<int>(u(g) * 12);
    for (int op = 0; op < ops; ++op) {
      now += cadence;
      if (u(g) < 0.8) {
        eng.ingest_pointing(PointingRecord{now, "lgs", kFuzzLaserAz, kFuzzLaserEl, 0.1});
        laser_ts = now;
      }
      if (u(g) < 0.8) {
        on_beam = u(g) < 0.3;
        const PointingRecord r = on_beam ? PointingRecord{now, "scope_a", on_az, on_el, 0.1}
                                         : PointingRecord{now, "scope_a", 180, 20, 0.1};
        eng.ingest_pointing(r);
        scope_ts = now;
      }
      if (u(g) < 0.1) {
        const TimeNs start = now + static_cast<TimeNs>(u(g) * 4) * cadence / 2;
        windows.push_back({start, start + 1 + static_cast<TimeNs>(u(g) * 3 * cadence)});
        eng.set_windows(windows);
      }
      if (u(g) < 0.1) {
        // Arrives between cadence ticks.
        const TimeNs ts = now + static_cast<TimeNs>(u(g) * cadence);
        eng.post_event(AircraftEvent{AircraftTier::IrBoresight, ts});
        ++t.ir_events;
        last_ir = last_ir ? std::max(*last_ir, ts) : ts;
        latched.ir_detection = true;
        if (eng.state().shutter != Shutter::Closed) fail(t.ir_not_closed, "IR event left shutter open", seq, now);
      }
      if (u(g) < 0.05) {
        eng.operator_abort(now);
        latched.operator_abort = true;
      }

      const auto st = eng.step(now);
      ++t.steps;
      const auto cur = expected(now);
      latched = latched | cur;
      if (!(eng.current_hazards(now) == cur)) fail(t.oracle_mismatch, "current flags differ", seq, now);
      if (!(st.latched == latched)) fail(t.oracle_mismatch, "latched flags differ", seq, now);
      if (st.shutter == Shutter::Open && (cur.any() || st.latched.any()))
        fail(t.open_with_hazard, "shutter open with hazard", seq, now);
      if (cur.feed_stale && st.shutter == Shutter::Open) fail(t.stale_open, "stale feed with shutter open", seq, now);

      if (u(g) < 0.3) {
        const auto r = eng.rearm(now);
        ++t.rearms;
        t.rearms_accepted += r.accepted;
        const bool ok = !cur.any();
        latched = ok ? HazardFlags{} : cur;
        if (r.accepted != ok || (r.state.shutter == Shutter::Open) != ok)
          fail(t.rearm_mismatch, "rearm verdict differs", seq, now);
        if (r.state.shutter == Shutter::Open && r.state.latched.any())
          fail(t.open_with_hazard, "rearm opened with a latch", seq, now);
      }
    }
  }
  return t;
}

}  // namespace testutil
