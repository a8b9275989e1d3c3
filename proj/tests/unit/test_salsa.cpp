#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "ltcs_trial.hpp"
#include "mcao/core/errors.hpp"
#include "mcao/salsa/feeds.hpp"
#include "mcao/salsa/geometry.hpp"
#include "mcao/salsa/safety.hpp"
#include "safety_fuzz.hpp"

using namespace mcao;
using namespace mcao::salsa;

namespace {

SalsaConfig three_sites() { return SalsaConfig::defaults(); }

void report_all(SafetyEngine& e, TimeNs t, double scope_el = 20) {
  e.ingest_pointing(PointingRecord{t, "lgs", 0, 60, 0.1});
  e.ingest_pointing(PointingRecord{t, "scope_a", 180, scope_el, 0.1});
  e.ingest_pointing(PointingRecord{t, "scope_b", 180, scope_el, 0.1});
}

// Minimum track-to-beam angle sampled every 0.1 s over the horizon.
double stepped_min_angle(const AircraftEvent& e, const Vec3& beam_dir, double horizon) {
  double best = 180;
  for (int k = 0; k <= static_cast<int>(horizon * 10 + 0.5); ++k)
    best = std::min(best, angle_between_deg(aircraft_track_point(e, k * 0.1), beam_dir));
  return best;
}

}  // namespace

TEST_CASE("geometry: co-pointed and anti-pointed scopes") {
  const auto beam = LaserBeamModel::pointing(Vec3::Zero(), 0, 60, 0.25, 30000);
  const ViewCone same{Vec3::Zero(), direction_from_azel(0, 60), 0.1};
  CHECK(predict_beam_collision(beam, same).collides);

  const auto zenith = LaserBeamModel::pointing(Vec3::Zero(), 0, 90, 0.25, 30000);
  const ViewCone away{Vec3(1000, 0, 0), direction_from_azel(90, 10), 0.1};
  const auto r = predict_beam_collision(zenith, away);
  CHECK_FALSE(r.collides);
  CHECK(r.min_margin_deg > 10);

  CHECK((direction_from_azel(0, 90) - Vec3::UnitZ()).norm() < 1e-12);
  CHECK((direction_from_azel(90, 0) - Vec3::UnitX()).norm() < 1e-12);
  CHECK(angle_between_deg(Vec3::UnitX(), Vec3(1, 1e-9, 0)) == doctest::Approx(rad2deg(1e-9)).epsilon(1e-6));
  CHECK(angle_between_deg(Vec3::UnitX(), -Vec3::UnitX()) == doctest::Approx(180));
}

TEST_CASE("geometry: analytic predicate agrees with the sampling oracle") {
  const auto t = testutil::run_ltcs_trials(1, 10000);
  MESSAGE("cases " << t.cases << " collisions " << t.collisions << " in band " << t.in_band << " disagreements "
                   << t.disagreements << " undersampled " << t.oracle_undersampled << " unexplained "
                   << t.unexplained);
  CHECK(t.collisions > 100);
  CHECK(t.collisions < t.cases - 100);
  CHECK_MESSAGE(t.unexplained == 0, t.first_unexplained);
}

TEST_CASE("geometry: margin at the minimum matches the pointwise margin") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const auto beam = LaserBeamModel::pointing(Vec3::Zero(), u(g) * 360, 15 + u(g) * 75, 0.25, 30000);
    const ViewCone cone{Vec3(u(g) * 2000 - 1000, u(g) * 2000 - 1000, 0), direction_from_azel(u(g) * 360, 15 + u(g) * 75),
                        0.1};
    const auto r = predict_beam_collision(beam, cone);
    CHECK(r.s_at_min_m >= 0);
    CHECK(r.s_at_min_m <= 30000);
    CHECK(margin_at_deg(beam, cone, r.s_at_min_m) == doctest::Approx(r.min_margin_deg).epsilon(1e-9));
    CHECK(r.min_margin_deg <= margin_at_deg(beam, cone, 0) + 1e-9);
    CHECK(r.min_margin_deg <= margin_at_deg(beam, cone, 30000) + 1e-9);
  }
}

TEST_CASE("feeds: pointing ingest") {
  PointingTable table(three_sites().sites, 5 * kNsPerSecond);
  CHECK(table.ingest("1970-01-01T00:00:01Z,scope_a,120.5,45,0.1", 1) == IngestStatus::Accepted);
  const auto* p = table.find("scope_a");
  REQUIRE(p != nullptr);
  CHECK(p->az_deg == 120.5);
  CHECK(p->timestamp == kNsPerSecond);
  CHECK(p->position == Vec3(420, -150, 12));

  CHECK(table.ingest("0.5,scope_a,0,45,0.1") == IngestStatus::OutOfOrder);
  CHECK(table.ingest("1.0,scope_a,0,45,0.1") == IngestStatus::OutOfOrder);
  CHECK(table.find("scope_a")->az_deg == 120.5);
  CHECK(table.ingest("2,nowhere,0,45,0.1") == IngestStatus::UnknownScope);
  CHECK(table.ingest("2,scope_a,0,95,0.1") == IngestStatus::ParseError);
  CHECK(table.ingest("garbage") == IngestStatus::ParseError);
  CHECK(table.ingest("2,scope_a,x,45,0.1") == IngestStatus::ParseError);
  CHECK(table.parse_errors() == 3);
  CHECK(table.out_of_order() == 2);
  CHECK(table.unknown_scope() == 1);

  CHECK(table.stale("scope_b", 0));
  CHECK_FALSE(table.stale("scope_a", 6 * kNsPerSecond));
  CHECK(table.stale("scope_a", 6 * kNsPerSecond + 1));

  try {
    parse_pointing_record("1,scope_a,0,45", 17);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 17);
  }
}

TEST_CASE("aircraft: tiers and track extrapolation") {
  const auto beam = LaserBeamModel::pointing(Vec3::Zero(), 0, 60, 0.25, 30000);
  const AircraftOptions opt{15, 30};

  CHECK(evaluate_aircraft(parse_aircraft_record("1,IR_BORESIGHT"), beam, opt) == AircraftAction::Shutter);
  CHECK(evaluate_aircraft(parse_aircraft_record("1,RADAR,0,60,0,0"), beam, opt) == AircraftAction::Advisory);

  // 90 degrees from the beam and sinking towards the opposite horizon.
  const AircraftEvent away{AircraftTier::AllSky, 0, 180, 30, 0, -1};
  CHECK(angle_between_deg(direction_from_azel(180, 30), beam.direction) == doctest::Approx(90));
  CHECK(evaluate_aircraft(away, beam, opt) == AircraftAction::None);

  // 30 degrees below the beam along its azimuth, climbing at 1 deg/s.
  const AircraftEvent closing{AircraftTier::AllSky, 0, 0, 30, 0, 1};
  CHECK(angle_between_deg(aircraft_track_point(closing, 0), beam.direction) == doctest::Approx(30));
  CHECK(stepped_min_angle(closing, beam.direction, 20) < 15);
  CHECK(evaluate_aircraft(closing, beam, opt) == AircraftAction::Warning);
  CHECK(evaluate_aircraft(closing, beam, AircraftOptions{15, 5}) == AircraftAction::None);

  CHECK_THROWS_AS(parse_aircraft_record("1,IR,3"), ParseError);
  CHECK_THROWS_AS(parse_aircraft_record("1,JET,0,0,0,0"), ParseError);
}

TEST_CASE("aircraft: random tracks against a stepped oracle") {
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(0, 1);
  int warnings = 0, compared = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto beam = LaserBeamModel::pointing(Vec3::Zero(), u(g) * 360, 20 + u(g) * 70, 0.25, 30000);
    const AircraftEvent e{AircraftTier::AllSky, 0, u(g) * 360, u(g) * 80, (u(g) - 0.5) * 4, (u(g) - 0.5) * 4};
    const double oracle_min = stepped_min_angle(e, beam.direction, 30);
    // The 0.1 s sampling can overshoot a minimum by a few hundredths of a degree.
    if (std::abs(oracle_min - 15) < 0.05) continue;
    ++compared;
    const auto a = evaluate_aircraft(e, beam, {15, 30});
    CHECK((a == AircraftAction::Warning) == (oracle_min < 15));
    warnings += a == AircraftAction::Warning;
  }
  CHECK(compared > 950);
  CHECK(warnings > 50);
}

TEST_CASE("satellite windows: closed intervals against a linear scan") {
  CHECK(check_satellite(0, {}));
  const auto one = normalize_windows({{10, 20}});
  CHECK(check_satellite(9, one));
  CHECK_FALSE(check_satellite(10, one));
  CHECK_FALSE(check_satellite(20, one));
  CHECK(check_satellite(21, one));
  CHECK(normalize_windows({{5, 10}, {0, 5}, {20, 30}, {25, 26}}).size() == 2);

  std::mt19937_64 g(3);
  std::uniform_int_distribution<TimeNs> pos(0, 1000), len(1, 60);
  for (int i = 0; i < 1000; ++i) {
    std::vector<ClosureWindow> w(g() % 12);
    for (auto& x : w) {
      x.start = pos(g);
      x.end = x.start + len(g);
    }
    const auto norm = normalize_windows(w);
    for (int k = 0; k < 20; ++k) {
      TimeNs t = pos(g);
      if (!w.empty() && k % 4 == 0) t = (k % 8 == 0) ? w[g() % w.size()].start : w[g() % w.size()].end;
      const bool inside = std::any_of(w.begin(), w.end(), [&](const auto& x) { return x.start <= t && t <= x.end; });
      CHECK(check_satellite(t, norm) == !inside);
    }
  }
  CHECK_THROWS_AS(parse_window_record("2,1"), ParseError);
  CHECK(parse_window_file("# header\n1,2\n\n3,4\n").size() == 2);
}

TEST_CASE("latch rules: pure functions over every flag combination") {
  auto flags = [](int m) { return HazardFlags{bool(m & 1), bool(m & 2), bool(m & 4), bool(m & 8), bool(m & 16)}; };
  for (int prev = 0; prev < 32; ++prev)
    for (int cur = 0; cur < 32; ++cur) {
      HazardState s;
      s.latched = flags(prev);
      s.shutter = s.latched.any() ? Shutter::Closed : Shutter::Open;
      const auto l = latch_hazards(s, flags(cur));
      CHECK(l.latched == (flags(prev) | flags(cur)));
      CHECK((l.shutter == Shutter::Open) == (prev == 0 && cur == 0));
      // Adding a hazard never opens a closed shutter.
      for (int bit = 0; bit < 5; ++bit)
        if (l.shutter == Shutter::Closed) CHECK(latch_hazards(s, flags(cur | 1 << bit)).shutter == Shutter::Closed);
      bool ok = false;
      const auto r = rearm_hazards(s, flags(cur), &ok);
      CHECK(ok == (cur == 0));
      CHECK((r.shutter == Shutter::Open) == (cur == 0));
      CHECK(r.latched == (cur == 0 ? HazardFlags{} : flags(cur)));
    }
}

TEST_CASE("safety engine: randomized sequences against the replay oracle") {
  const auto [az, el] = testutil::fuzz_on_beam_azel();
  const auto beam = LaserBeamModel::pointing(Vec3::Zero(), testutil::kFuzzLaserAz, testutil::kFuzzLaserEl, 0.25, 30000);
  CHECK(predict_beam_collision(beam, {Vec3(420, -150, 12), direction_from_azel(az, el), 0.1}).collides);
  CHECK_FALSE(predict_beam_collision(beam, {Vec3(420, -150, 12), direction_from_azel(180, 20), 0.1}).collides);

  const auto t = testutil::run_safety_fuzz(11, 20000);
  MESSAGE("sequences " << t.sequences << " steps " << t.steps << " rearms " << t.rearms << " accepted "
                       << t.rearms_accepted << " ir " << t.ir_events);
  CHECK(t.rearms_accepted > 100);
  CHECK(t.rearms_accepted < t.rearms);
  CHECK(t.ir_events > 1000);
  CHECK_MESSAGE(t.failures() == 0, t.first_failure);
}

TEST_CASE("safety engine: stale and never-reported feeds close the shutter") {
  SafetyEngine e(three_sites());
  auto s = e.step(0);
  CHECK(s.shutter == Shutter::Closed);
  CHECK(s.latched.feed_stale);

  // Two of three sites reporting is still stale.
  e.ingest_pointing(PointingRecord{kNsPerSecond, "lgs", 0, 60, 0.1});
  e.ingest_pointing(PointingRecord{kNsPerSecond, "scope_a", 180, 20, 0.1});
  CHECK_FALSE(e.rearm(kNsPerSecond).accepted);
  CHECK(e.state().causes == std::vector<std::string>{"feed_stale"});

  report_all(e, 2 * kNsPerSecond);
  CHECK(e.rearm(2 * kNsPerSecond).accepted);
  CHECK(e.step(7 * kNsPerSecond).shutter == Shutter::Open);
  s = e.step(7 * kNsPerSecond + 1);
  CHECK(s.shutter == Shutter::Closed);
  CHECK(s.causes == std::vector<std::string>{"feed_stale"});
}

TEST_CASE("safety engine: hazards latch until a clean rearm") {
  SafetyEngine e(three_sites());
  report_all(e, 0);
  REQUIRE(e.rearm(0).accepted);

  std::vector<std::pair<Shutter, TimeNs>> changes;
  e.on_change = [&](const HazardState& s, TimeNs t) { changes.emplace_back(s.shutter, t); };

  // IR closes synchronously, before any step runs.
  e.post_event(AircraftEvent{AircraftTier::IrBoresight, 150'000'000});
  CHECK(e.state().shutter == Shutter::Closed);
  REQUIRE(changes.size() == 1);
  CHECK(changes[0] == std::pair{Shutter::Closed, TimeNs{150'000'000}});

  // Still current inside the hold, latched after it until rearmed.
  CHECK_FALSE(e.rearm(kNsPerSecond).accepted);
  report_all(e, 2 * kNsPerSecond);
  CHECK(e.step(2 * kNsPerSecond).shutter == Shutter::Closed);
  CHECK(e.rearm(2 * kNsPerSecond).accepted);
  CHECK(e.state().shutter == Shutter::Open);

  e.operator_abort(2 * kNsPerSecond + 10);
  CHECK(e.state().causes == std::vector<std::string>{"operator_abort"});
  CHECK(e.rearm(2 * kNsPerSecond + 20).accepted);
}

TEST_CASE("safety engine: rearm inside a satellite window stays closed") {
  SafetyEngine e(three_sites());
  e.set_windows({{kNsPerSecond, 2 * kNsPerSecond}});
  report_all(e, 1'500'000'000);
  const auto r = e.rearm(1'500'000'000);
  CHECK_FALSE(r.accepted);
  CHECK(r.state.shutter == Shutter::Closed);
  CHECK(r.state.causes == std::vector<std::string>{"satellite_window"});
  CHECK(e.rearm(2 * kNsPerSecond).state.shutter == Shutter::Closed);
  CHECK(e.rearm(2 * kNsPerSecond + 1).accepted);
}

TEST_CASE("safety engine: aircraft warnings do not move the shutter") {
  SafetyEngine e(three_sites());
  report_all(e, 0);
  REQUIRE(e.rearm(0).accepted);
  e.post_event(AircraftEvent{AircraftTier::AllSky, 50, 0, 30, 0, 1});
  e.post_event(AircraftEvent{AircraftTier::Radar, 60, 10, 10, 0, 0});
  e.post_event(AircraftEvent{AircraftTier::AllSky, 500'000'000, 0, 30, 0, 1});
  auto s = e.step(100);
  CHECK(s.allsky_warning);
  CHECK(s.radar_advisory);
  CHECK(s.shutter == Shutter::Open);
  CHECK(e.warnings().size() == 2);
  s = e.step(200);
  CHECK_FALSE(s.allsky_warning);
  CHECK(e.step(500'000'000).allsky_warning);
}

TEST_CASE("salsa config validation") {
  auto c = SalsaConfig::defaults();
  c.cadence_hz = 0;
  CHECK_THROWS_AS(SafetyEngine{c}, ConfigError);
  c = SalsaConfig::defaults();
  c.scatter_ceiling_m = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
