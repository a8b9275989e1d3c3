#include "mcao/salsa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "mcao/core/errors.hpp"

namespace mcao::salsa {

Vec3 direction_from_azel(double az_deg, double el_deg) {
  const double az = deg2rad(az_deg), el = deg2rad(el_deg);
  return {std::sin(az) * std::cos(el), std::cos(az) * std::cos(el), std::sin(el)};
}

double angle_between_deg(const Vec3& a, const Vec3& b) {
  return rad2deg(std::atan2(a.cross(b).norm(), a.dot(b)));
}

LaserBeamModel LaserBeamModel::pointing(const Vec3& origin, double az_deg, double el_deg, double radius_m,
                                        double scatter_ceiling_m) {
  LaserBeamModel b;
  b.origin = origin;
  b.direction = direction_from_azel(az_deg, el_deg);
  b.radius_m = radius_m;
  b.scatter_ceiling_m = scatter_ceiling_m;
  b.validate();
  return b;
}

void LaserBeamModel::validate() const {
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw ConfigError("beam direction must be a unit vector");
  if (!(scatter_ceiling_m > 0)) throw ConfigError("scatter ceiling must be positive");
  if (radius_m < 0) throw ConfigError("beam radius must be non-negative");
}

double margin_at_deg(const LaserBeamModel& beam, const ViewCone& cone, double s) {
  const Vec3 w = beam.origin + s * beam.direction - cone.apex;
  const double r = w.norm();
  if (r <= beam.radius_m) return -180.0 - cone.half_angle_deg;
  return angle_between_deg(w, cone.axis) - cone.half_angle_deg - rad2deg(std::atan(beam.radius_m / r));
}

CollisionResult predict_beam_collision(const LaserBeamModel& beam, const ViewCone& cone) {
  const double S = beam.scatter_ceiling_m;
  const Vec3& u = beam.direction;
  const Vec3& v = cone.axis;
  const Vec3 a = beam.origin - cone.apex;

  std::vector<double> cand{0.0, S};
  const double au = a.dot(u), av = a.dot(v), uv = u.dot(v), aa = a.squaredNorm();
  const double den = uv * au - av;
  if (std::abs(den) > 1e-300) {
    const double s_star = (av * au - uv * aa) / den;
    if (s_star > 0 && s_star < S) cand.push_back(s_star);
  }
  const double s_close = -au;
  if (s_close > 0 && s_close < S) cand.push_back(s_close);
  // The apex-within-radius region is an interval around the closest approach.
  std::sort(cand.begin(), cand.end());

  auto f = [&](double s) { return margin_at_deg(beam, cone, s); };
  CollisionResult best{false, f(cand[0]), cand[0]};
  auto consider = [&](double s, double m) {
    if (m < best.min_margin_deg) {
      best.min_margin_deg = m;
      best.s_at_min_m = s;
    }
  };
  for (std::size_t i = 1; i < cand.size(); ++i) consider(cand[i], f(cand[i]));
  for (std::size_t i = 0; i + 1 < cand.size(); ++i) {
    const double lo = cand[i], hi = cand[i + 1];
    if (hi - lo <= 0) continue;
    // Coarse scan guards against a bracket holding more than one local minimum.
    constexpr int kScan = 16;
    double s_best = lo, m_best = f(lo);
    for (int k = 1; k <= kScan; ++k) {
      const double s = lo + (hi - lo) * k / kScan;
      const double m = f(s);
      if (m < m_best) {
        m_best = m;
        s_best = s;
      }
    }
    const double step = (hi - lo) / kScan;
    const double a0 = std::max(lo, s_best - step), b0 = std::min(hi, s_best + step);
    const auto [s_min, m_min] = boost::math::tools::brent_find_minima(f, a0, b0, 52);
    consider(s_best, m_best);
    consider(s_min, m_min);
  }
  best.collides = best.min_margin_deg < 0.0;
  return best;
}

RayAngle min_angle_along_ray(const Vec3& p0, const Vec3& dp, double t_max, const Vec3& direction) {
  auto angle = [&](double t) { return angle_between_deg(p0 + t * dp, direction); };
  RayAngle best{angle(0.0), 0.0};
  if (t_max <= 0) return best;
  const double end = angle(t_max);
  if (end < best.angle_deg) best = {end, t_max};
  const double av = p0.dot(direction), au = p0.dot(dp), uv = dp.dot(direction), aa = p0.squaredNorm(),
               uu = dp.squaredNorm();
  // Stationary point of the angle for a ray with a non-unit step.
  const double den = uv * au - av * uu;
  if (std::abs(den) > 1e-300) {
    const double t = (av * au - uv * aa) / den;
    if (t > 0 && t < t_max) {
      const double a = angle(t);
      if (a < best.angle_deg) best = {a, t};
    }
  }
  return best;
}

}  // namespace mcao::salsa
