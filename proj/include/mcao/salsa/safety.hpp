#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "mcao/core/timebase.hpp"
#include "mcao/salsa/feeds.hpp"

namespace mcao {
class Config;
}

namespace mcao::salsa {

enum class Shutter { Open, Closed };
const char* to_string(Shutter s);

struct HazardFlags {
  bool beam_collision = false;
  bool ir_detection = false;
  bool satellite_window = false;
  bool feed_stale = false;
  bool operator_abort = false;

  bool any() const { return beam_collision || ir_detection || satellite_window || feed_stale || operator_abort; }
  std::vector<std::string> names() const;
  HazardFlags operator|(const HazardFlags& o) const;
  bool operator==(const HazardFlags&) const = default;
};

struct HazardState {
  HazardFlags latched;
  bool allsky_warning = false;
  bool radar_advisory = false;
  Shutter shutter = Shutter::Open;
  std::vector<std::string> causes;
};

// Pure latch rules shared by the engine and its tests.
HazardState latch_hazards(const HazardState& prev, const HazardFlags& current);
// Latches clear only when nothing is currently hazardous.
HazardState rearm_hazards(const HazardState& prev, const HazardFlags& current, bool* accepted = nullptr);

struct SalsaConfig {
  std::string laser_scope = "lgs";
  std::map<std::string, Vec3> sites;  // every scope on the site, the laser's own included
  double beam_radius_m = 0.25;
  double scatter_ceiling_m = 30'000.0;
  double warn_radius_deg = 15.0;
  double horizon_s = 30.0;
  double cadence_hz = 10.0;
  double stale_after_s = 5.0;
  double ir_hold_s = 1.0;  // an IR detection stays current this long for rearm purposes

  static SalsaConfig defaults();
  static SalsaConfig from_config(const Config& cfg);
  void validate() const;
  TimeNs cadence_ns() const { return seconds_to_ns(1.0 / cadence_hz); }
};

struct CollisionReport {
  std::string scope_id;
  double min_margin_deg = 0;
  bool collides = false;
};

struct RearmResult {
  bool accepted = false;
  HazardState state;
};

class SafetyEngine {
 public:
  explicit SafetyEngine(SalsaConfig cfg);

  IngestStatus ingest_pointing(std::string_view line, int line_no = 0);
  IngestStatus ingest_pointing(const PointingRecord& rec);
  void set_windows(std::vector<ClosureWindow> windows);

  // ALLSKY / RADAR events wait for the next step; IR events go straight to on_ir_event.
  void post_event(const AircraftEvent& e);
  HazardState on_ir_event(TimeNs t);
  HazardState operator_abort(TimeNs t);

  HazardState step(TimeNs now);
  RearmResult rearm(TimeNs now);

  HazardState state() const;
  HazardFlags current_hazards(TimeNs now) const;
  std::vector<CollisionReport> collisions(TimeNs now) const;
  std::optional<LaserBeamModel> beam(TimeNs now) const;

  struct Warning {
    TimeNs t;
    AircraftTier tier;
    AircraftAction action;
  };
  const std::vector<Warning>& warnings() const { return warnings_; }

  const PointingTable& table() const { return table_; }
  const SalsaConfig& config() const { return cfg_; }

  // Invoked under the engine lock whenever the shutter or cause list changes.
  std::function<void(const HazardState&, TimeNs)> on_change;

 private:
  HazardFlags current_locked(TimeNs now) const;
  void commit(HazardState next, TimeNs t);

  SalsaConfig cfg_;
  mutable std::mutex mu_;
  PointingTable table_;
  std::vector<ClosureWindow> windows_;
  std::deque<AircraftEvent> pending_;
  std::vector<Warning> warnings_;
  HazardState state_;
  TimeNs last_ir_ = 0;
  bool seen_ir_ = false;
};

}  // namespace mcao::salsa
