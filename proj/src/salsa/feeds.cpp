#include "mcao/salsa/feeds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mcao/core/errors.hpp"

namespace mcao::salsa {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view f, const char* what, int line_no) {
  double v = 0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v))
    throw ParseError(std::string("bad ") + what + " '" + std::string(f) + "'", line_no);
  return v;
}

TimeNs parse_time_field(std::string_view f, int line_no) {
  try {
    return parse_timestamp(f);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no);
  }
}

}  // namespace

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

PointingRecord parse_pointing_record(std::string_view line, int line_no) {
  const auto f = split_fields(line);
  if (f.size() != 5) throw ParseError("pointing record needs 5 fields, got " + std::to_string(f.size()), line_no);
  PointingRecord r;
  r.timestamp = parse_time_field(f[0], line_no);
  if (f[1].empty()) throw ParseError("empty scope id", line_no);
  r.scope_id = std::string(f[1]);
  r.az_deg = parse_number(f[2], "azimuth", line_no);
  r.el_deg = parse_number(f[3], "elevation", line_no);
  r.fov_deg = parse_number(f[4], "field of view", line_no);
  if (r.el_deg < 0 || r.el_deg > 90) throw ParseError("elevation outside [0, 90]", line_no);
  if (!(r.fov_deg > 0)) throw ParseError("field of view must be positive", line_no);
  return r;
}

PointingTable::PointingTable(std::map<std::string, Vec3> sites, TimeNs stale_after)
    : sites_(std::move(sites)), stale_after_(stale_after) {}

IngestStatus PointingTable::ingest(std::string_view line, int line_no) {
  PointingRecord rec;
  try {
    rec = parse_pointing_record(line, line_no);
  } catch (const ParseError&) {
    ++parse_errors_;
    return IngestStatus::ParseError;
  }
  return ingest(rec);
}

IngestStatus PointingTable::ingest(const PointingRecord& rec) {
  const auto site = sites_.find(rec.scope_id);
  if (site == sites_.end()) {
    ++unknown_scope_;
    return IngestStatus::UnknownScope;
  }
  auto it = table_.find(rec.scope_id);
  if (it != table_.end() && rec.timestamp <= it->second.timestamp) {
    ++out_of_order_;
    return IngestStatus::OutOfOrder;
  }
  TelescopePointing p;
  p.scope_id = rec.scope_id;
  p.position = site->second;
  p.az_deg = rec.az_deg;
  p.el_deg = rec.el_deg;
  p.fov_deg = rec.fov_deg;
  p.timestamp = rec.timestamp;
  p.stale_after = stale_after_;
  table_[rec.scope_id] = p;
  return IngestStatus::Accepted;
}

const TelescopePointing* PointingTable::find(const std::string& scope_id) const {
  auto it = table_.find(scope_id);
  return it == table_.end() ? nullptr : &it->second;
}

bool PointingTable::stale(const std::string& scope_id, TimeNs now) const {
  const auto* p = find(scope_id);
  return p == nullptr || p->stale_at(now);
}

ClosureWindow parse_window_record(std::string_view line, int line_no) {
  const auto f = split_fields(line);
  if (f.size() != 2) throw ParseError("closure window needs start,end", line_no);
  ClosureWindow w{parse_time_field(f[0], line_no), parse_time_field(f[1], line_no)};
  if (!(w.start < w.end)) throw ParseError("closure window must end after it starts", line_no);
  return w;
}

std::vector<ClosureWindow> parse_window_file(std::string_view text) {
  std::vector<ClosureWindow> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.push_back(parse_window_record(t, n));
  }
  return out;
}

std::vector<ClosureWindow> normalize_windows(std::vector<ClosureWindow> w) {
  std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<ClosureWindow> out;
  for (const auto& x : w) {
    if (!out.empty() && x.start <= out.back().end)
      out.back().end = std::max(out.back().end, x.end);
    else
      out.push_back(x);
  }
  return out;
}

bool check_satellite(TimeNs t, const std::vector<ClosureWindow>& w) {
  // First window ending at or after t is the only one that can contain it.
  auto it = std::lower_bound(w.begin(), w.end(), t, [](const ClosureWindow& x, TimeNs v) { return x.end < v; });
  return it == w.end() || t < it->start;
}

const char* to_string(AircraftTier t) {
  switch (t) {
    case AircraftTier::IrBoresight: return "IR_BORESIGHT";
    case AircraftTier::AllSky: return "ALLSKY";
    case AircraftTier::Radar: return "RADAR";
  }
  return "?";
}

const char* to_string(AircraftAction a) {
  switch (a) {
    case AircraftAction::None: return "NONE";
    case AircraftAction::Advisory: return "ADVISORY";
    case AircraftAction::Warning: return "WARNING";
    case AircraftAction::Shutter: return "SHUTTER";
  }
  return "?";
}

AircraftEvent parse_aircraft_record(std::string_view line, int line_no) {
  const auto f = split_fields(line);
  if (f.size() < 2) throw ParseError("aircraft record needs timestamp,tier", line_no);
  AircraftEvent e;
  e.timestamp = parse_time_field(f[0], line_no);
  const auto tier = f[1];
  if (tier == "IR_BORESIGHT" || tier == "IR") {
    e.tier = AircraftTier::IrBoresight;
    for (std::size_t i = 2; i < f.size(); ++i)
      if (!f[i].empty()) throw ParseError("IR events carry only a timestamp", line_no);
    if (f.size() != 2 && f.size() != 6) throw ParseError("bad field count for IR event", line_no);
    return e;
  }
  if (tier == "ALLSKY")
    e.tier = AircraftTier::AllSky;
  else if (tier == "RADAR")
    e.tier = AircraftTier::Radar;
  else
    throw ParseError("unknown aircraft tier '" + std::string(tier) + "'", line_no);
  if (f.size() != 6) throw ParseError("aircraft track needs 6 fields", line_no);
  e.az_deg = parse_number(f[2], "azimuth", line_no);
  e.el_deg = parse_number(f[3], "elevation", line_no);
  e.vaz_degps = parse_number(f[4], "azimuth rate", line_no);
  e.vel_degps = parse_number(f[5], "elevation rate", line_no);
  if (e.el_deg < 0 || e.el_deg > 90) throw ParseError("elevation outside [0, 90]", line_no);
  return e;
}

namespace {

Vec3 track_rate(const AircraftEvent& e) {
  const double az = deg2rad(e.az_deg), el = deg2rad(e.el_deg);
  const Vec3 d_az{std::cos(az) * std::cos(el), -std::sin(az) * std::cos(el), 0.0};
  const Vec3 d_el{-std::sin(az) * std::sin(el), -std::cos(az) * std::sin(el), std::cos(el)};
  return deg2rad(e.vaz_degps) * d_az + deg2rad(e.vel_degps) * d_el;
}

}  // namespace

Vec3 aircraft_track_point(const AircraftEvent& e, double t) {
  return (direction_from_azel(e.az_deg, e.el_deg) + t * track_rate(e)).normalized();
}

AircraftAction evaluate_aircraft(const AircraftEvent& e, const LaserBeamModel& beam, const AircraftOptions& opt) {
  switch (e.tier) {
    case AircraftTier::IrBoresight: return AircraftAction::Shutter;
    case AircraftTier::Radar: return AircraftAction::Advisory;
    case AircraftTier::AllSky: break;
  }
  const Vec3 d0 = direction_from_azel(e.az_deg, e.el_deg);
  if (angle_between_deg(d0, beam.direction) < opt.warn_radius_deg) return AircraftAction::Warning;
  const auto closest = min_angle_along_ray(d0, track_rate(e), opt.horizon_s, beam.direction);
  return closest.angle_deg < opt.warn_radius_deg ? AircraftAction::Warning : AircraftAction::None;
}

}  // namespace mcao::salsa
