#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcao/core/timebase.hpp"
#include "mcao/salsa/geometry.hpp"

namespace mcao::salsa {

struct TelescopePointing {
  std::string scope_id;
  Vec3 position = Vec3::Zero();
  double az_deg = 0.0;
  double el_deg = 90.0;
  double fov_deg = 0.1;  // half-angle
  TimeNs timestamp = 0;
  TimeNs stale_after = 5 * kNsPerSecond;

  bool stale_at(TimeNs now) const { return now - timestamp > stale_after; }
  ViewCone cone() const { return {position, direction_from_azel(az_deg, el_deg), fov_deg}; }
};

// One feed line: timestamp_iso8601,scope_id,az_deg,el_deg,fov_deg
struct PointingRecord {
  TimeNs timestamp = 0;
  std::string scope_id;
  double az_deg = 0, el_deg = 0, fov_deg = 0;
};
PointingRecord parse_pointing_record(std::string_view line, int line_no = 0);

enum class IngestStatus { Accepted, OutOfOrder, UnknownScope, ParseError };

class PointingTable {
 public:
  PointingTable() = default;
  PointingTable(std::map<std::string, Vec3> sites, TimeNs stale_after);

  IngestStatus ingest(std::string_view line, int line_no = 0);
  IngestStatus ingest(const PointingRecord& rec);

  const TelescopePointing* find(const std::string& scope_id) const;
  // Every configured scope, whether or not it has reported yet.
  const std::map<std::string, Vec3>& sites() const { return sites_; }
  bool stale(const std::string& scope_id, TimeNs now) const;

  std::size_t parse_errors() const { return parse_errors_; }
  std::size_t out_of_order() const { return out_of_order_; }
  std::size_t unknown_scope() const { return unknown_scope_; }

 private:
  std::map<std::string, Vec3> sites_;
  TimeNs stale_after_ = 5 * kNsPerSecond;
  std::map<std::string, TelescopePointing> table_;
  std::size_t parse_errors_ = 0, out_of_order_ = 0, unknown_scope_ = 0;
};

struct ClosureWindow {
  TimeNs start = 0;
  TimeNs end = 0;  // a window forbids propagation over [start, end]
};

ClosureWindow parse_window_record(std::string_view line, int line_no = 0);
std::vector<ClosureWindow> parse_window_file(std::string_view text);
// Sorts and merges overlapping or touching windows.
std::vector<ClosureWindow> normalize_windows(std::vector<ClosureWindow> windows);
bool check_satellite(TimeNs t, const std::vector<ClosureWindow>& normalized);

enum class AircraftTier { IrBoresight, AllSky, Radar };
enum class AircraftAction { None, Advisory, Warning, Shutter };

const char* to_string(AircraftTier t);
const char* to_string(AircraftAction a);

struct AircraftEvent {
  AircraftTier tier = AircraftTier::IrBoresight;
  TimeNs timestamp = 0;
  double az_deg = 0, el_deg = 0;      // ALLSKY / RADAR only
  double vaz_degps = 0, vel_degps = 0;
};

// timestamp,tier,az_deg,el_deg,vaz_degps,vel_degps; the IR tier carries only
// the timestamp (trailing empty fields tolerated).
AircraftEvent parse_aircraft_record(std::string_view line, int line_no = 0);

struct AircraftOptions {
  double warn_radius_deg = 15.0;
  double horizon_s = 30.0;
};

// Track direction t seconds ahead, extrapolated linearly in direction space.
Vec3 aircraft_track_point(const AircraftEvent& e, double t);
AircraftAction evaluate_aircraft(const AircraftEvent& e, const LaserBeamModel& beam,
                                 const AircraftOptions& opt = {});

// Splits a comma-separated record and trims spaces around fields.
std::vector<std::string_view> split_fields(std::string_view line);

}  // namespace mcao::salsa
