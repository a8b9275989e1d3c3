#include "mcao/salsa/safety.hpp"

#include <sstream>

#include "mcao/core/config.hpp"
#include "mcao/core/errors.hpp"

namespace mcao::salsa {

const char* to_string(Shutter s) { return s == Shutter::Open ? "OPEN" : "CLOSED"; }

std::vector<std::string> HazardFlags::names() const {
  std::vector<std::string> n;
  if (beam_collision) n.emplace_back("beam_collision");
  if (ir_detection) n.emplace_back("ir_detection");
  if (satellite_window) n.emplace_back("satellite_window");
  if (feed_stale) n.emplace_back("feed_stale");
  if (operator_abort) n.emplace_back("operator_abort");
  return n;
}

HazardFlags HazardFlags::operator|(const HazardFlags& o) const {
  return {beam_collision || o.beam_collision, ir_detection || o.ir_detection,
          satellite_window || o.satellite_window, feed_stale || o.feed_stale,
          operator_abort || o.operator_abort};
}

HazardState latch_hazards(const HazardState& prev, const HazardFlags& current) {
  HazardState s = prev;
  s.latched = prev.latched | current;
  s.shutter = s.latched.any() ? Shutter::Closed : Shutter::Open;
  s.causes = s.latched.names();
  return s;
}

HazardState rearm_hazards(const HazardState& prev, const HazardFlags& current, bool* accepted) {
  HazardState s = prev;
  const bool ok = !current.any();
  if (accepted) *accepted = ok;
  if (ok) {
    s.latched = {};
    s.shutter = Shutter::Open;
    s.causes.clear();
  } else {
    s.latched = current;
    s.shutter = Shutter::Closed;
    s.causes = current.names();
  }
  return s;
}

SalsaConfig SalsaConfig::defaults() {
  SalsaConfig c;
  c.sites = {{"lgs", Vec3(0, 0, 0)}, {"scope_a", Vec3(420, -150, 12)}, {"scope_b", Vec3(-310, 260, -8)}};
  return c;
}

namespace {

Vec3 parse_site(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 3) throw ConfigError(key + " needs east,north,up");
  return {v[0], v[1], v[2]};
}

}  // namespace

SalsaConfig SalsaConfig::from_config(const Config& cfg) {
  SalsaConfig c = defaults();
  const auto keys = cfg.keys_with_prefix("salsa.site.");
  if (!keys.empty()) {
    c.sites.clear();
    for (const auto& k : keys) c.sites[k.substr(11)] = parse_site(cfg.get_doubles(k, {}), k);
  }
  c.laser_scope = cfg.get_string("salsa.laser_scope", c.laser_scope);
  c.beam_radius_m = cfg.get_double("salsa.beam_radius_m", c.beam_radius_m);
  c.scatter_ceiling_m = cfg.get_double("salsa.scatter_ceiling_m", c.scatter_ceiling_m);
  c.warn_radius_deg = cfg.get_double("salsa.warn_radius_deg", c.warn_radius_deg);
  c.horizon_s = cfg.get_double("salsa.horizon_s", c.horizon_s);
  c.cadence_hz = cfg.get_double("salsa.cadence_hz", c.cadence_hz);
  c.stale_after_s = cfg.get_double("salsa.stale_after_s", c.stale_after_s);
  c.ir_hold_s = cfg.get_double("salsa.ir_hold_s", c.ir_hold_s);
  c.validate();
  if (!c.sites.count(c.laser_scope)) throw ConfigError("laser scope '" + c.laser_scope + "' has no site position");
  return c;
}

void SalsaConfig::validate() const {
  if (!(scatter_ceiling_m > 0)) throw ConfigError("salsa.scatter_ceiling_m must be positive");
  if (beam_radius_m < 0) throw ConfigError("salsa.beam_radius_m must be non-negative");
  if (!(cadence_hz > 0)) throw ConfigError("salsa.cadence_hz must be positive");
  if (!(stale_after_s > 0)) throw ConfigError("salsa.stale_after_s must be positive");
  if (warn_radius_deg < 0 || horizon_s < 0 || ir_hold_s < 0) throw ConfigError("salsa timing/radius values must be non-negative");
}

SafetyEngine::SafetyEngine(SalsaConfig cfg)
    : cfg_(std::move(cfg)), table_(cfg_.sites, seconds_to_ns(cfg_.stale_after_s)) {
  cfg_.validate();
}

IngestStatus SafetyEngine::ingest_pointing(std::string_view line, int line_no) {
  std::lock_guard lk(mu_);
  return table_.ingest(line, line_no);
}

IngestStatus SafetyEngine::ingest_pointing(const PointingRecord& rec) {
  std::lock_guard lk(mu_);
  return table_.ingest(rec);
}

void SafetyEngine::set_windows(std::vector<ClosureWindow> windows) {
  std::lock_guard lk(mu_);
  windows_ = normalize_windows(std::move(windows));
}

void SafetyEngine::post_event(const AircraftEvent& e) {
  if (e.tier == AircraftTier::IrBoresight) {
    on_ir_event(e.timestamp);
    return;
  }
  std::lock_guard lk(mu_);
  pending_.push_back(e);
}

HazardState SafetyEngine::on_ir_event(TimeNs t) {
  std::lock_guard lk(mu_);
  last_ir_ = seen_ir_ ? std::max(last_ir_, t) : t;
  seen_ir_ = true;
  warnings_.push_back({t, AircraftTier::IrBoresight, AircraftAction::Shutter});
  HazardFlags f;
  f.ir_detection = true;
  commit(latch_hazards(state_, f), t);
  return state_;
}

HazardState SafetyEngine::operator_abort(TimeNs t) {
  std::lock_guard lk(mu_);
  HazardFlags f;
  f.operator_abort = true;
  commit(latch_hazards(state_, f), t);
  return state_;
}

std::optional<LaserBeamModel> SafetyEngine::beam(TimeNs now) const {
  std::lock_guard lk(mu_);
  const auto* p = table_.find(cfg_.laser_scope);
  if (p == nullptr || p->stale_at(now)) return std::nullopt;
  return LaserBeamModel::pointing(p->position, p->az_deg, p->el_deg, cfg_.beam_radius_m, cfg_.scatter_ceiling_m);
}

std::vector<CollisionReport> SafetyEngine::collisions(TimeNs now) const {
  std::lock_guard lk(mu_);
  std::vector<CollisionReport> out;
  const auto* laser = table_.find(cfg_.laser_scope);
  if (laser == nullptr || laser->stale_at(now)) return out;
  const auto beam =
      LaserBeamModel::pointing(laser->position, laser->az_deg, laser->el_deg, cfg_.beam_radius_m, cfg_.scatter_ceiling_m);
  for (const auto& [id, pos] : table_.sites()) {
    if (id == cfg_.laser_scope) continue;
    const auto* p = table_.find(id);
    if (p == nullptr || p->stale_at(now)) continue;
    const auto r = predict_beam_collision(beam, p->cone());
    out.push_back({id, r.min_margin_deg, r.collides});
  }
  return out;
}

HazardFlags SafetyEngine::current_locked(TimeNs now) const {
  HazardFlags f;
  for (const auto& [id, pos] : table_.sites())
    if (table_.stale(id, now)) f.feed_stale = true;
  const auto* laser = table_.find(cfg_.laser_scope);
  if (laser != nullptr && !laser->stale_at(now)) {
    const auto beam = LaserBeamModel::pointing(laser->position, laser->az_deg, laser->el_deg, cfg_.beam_radius_m,
                                               cfg_.scatter_ceiling_m);
    for (const auto& [id, pos] : table_.sites()) {
      if (id == cfg_.laser_scope) continue;
      const auto* p = table_.find(id);
      if (p == nullptr || p->stale_at(now)) continue;
      if (predict_beam_collision(beam, p->cone()).collides) {
        f.beam_collision = true;
        break;
      }
    }
  }
  f.satellite_window = !check_satellite(now, windows_);
  f.ir_detection = seen_ir_ && last_ir_ <= now && now - last_ir_ < seconds_to_ns(cfg_.ir_hold_s);
  return f;
}

HazardFlags SafetyEngine::current_hazards(TimeNs now) const {
  std::lock_guard lk(mu_);
  return current_locked(now);
}

HazardState SafetyEngine::step(TimeNs now) {
  std::lock_guard lk(mu_);
  HazardState next = state_;
  next.allsky_warning = false;
  next.radar_advisory = false;
  const auto* laser = table_.find(cfg_.laser_scope);
  std::optional<LaserBeamModel> beam;
  if (laser != nullptr)
    beam = LaserBeamModel::pointing(laser->position, laser->az_deg, laser->el_deg, cfg_.beam_radius_m,
                                    cfg_.scatter_ceiling_m);
  const AircraftOptions opt{cfg_.warn_radius_deg, cfg_.horizon_s};
  while (!pending_.empty() && pending_.front().timestamp <= now) {
    const auto e = pending_.front();
    pending_.pop_front();
    // Without a laser pointing the track cannot be compared; treat it as converging.
    const auto action = beam ? evaluate_aircraft(e, *beam, opt)
                             : (e.tier == AircraftTier::Radar ? AircraftAction::Advisory : AircraftAction::Warning);
    if (action == AircraftAction::Warning) next.allsky_warning = true;
    if (action == AircraftAction::Advisory) next.radar_advisory = true;
    if (action != AircraftAction::None) warnings_.push_back({e.timestamp, e.tier, action});
  }
  commit(latch_hazards(next, current_locked(now)), now);
  return state_;
}

RearmResult SafetyEngine::rearm(TimeNs now) {
  std::lock_guard lk(mu_);
  RearmResult r;
  commit(rearm_hazards(state_, current_locked(now), &r.accepted), now);
  r.state = state_;
  return r;
}

HazardState SafetyEngine::state() const {
  std::lock_guard lk(mu_);
  return state_;
}

void SafetyEngine::commit(HazardState next, TimeNs t) {
  const bool changed = next.shutter != state_.shutter || next.causes != state_.causes;
  state_ = std::move(next);
  if (changed && on_change) on_change(state_, t);
}

}  // namespace mcao::salsa
