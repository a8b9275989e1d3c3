#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mcao::salsa {

using Vec3 = Eigen::Vector3d;  // site frame: east, north, up (meters)

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Unit vector for azimuth (0 = north, 90 = east) and elevation, degrees.
Vec3 direction_from_azel(double az_deg, double el_deg);

// Angle between two non-zero vectors, degrees, accurate near 0 and 180.
double angle_between_deg(const Vec3& a, const Vec3& b);

struct LaserBeamModel {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double radius_m = 0.25;
  double scatter_ceiling_m = 30'000.0;  // beam length beyond which scatter is ignored

  static LaserBeamModel pointing(const Vec3& origin, double az_deg, double el_deg, double radius_m,
                                 double scatter_ceiling_m);
  void validate() const;
};

struct ViewCone {
  Vec3 apex = Vec3::Zero();     // telescope aperture
  Vec3 axis = Vec3::UnitZ();    // unit pointing direction
  double half_angle_deg = 0.1;  // field-of-view half-angle
};

// Margin at beam arc length s: the angle from the cone axis to the beam point,
// less the half-angle, less the beam's angular size atan(radius / range) seen
// from the apex. A beam point within one radius of the apex counts as inside.
double margin_at_deg(const LaserBeamModel& beam, const ViewCone& cone, double s);

struct CollisionResult {
  bool collides = false;
  double min_margin_deg = 0.0;
  double s_at_min_m = 0.0;
};

// Minimum margin over s in [0, scatter ceiling]. Candidates are the segment
// ends, the closed-form stationary point of the axis angle and the point of
// closest approach to the apex; each bracket between candidates is refined
// with Brent's method.
CollisionResult predict_beam_collision(const LaserBeamModel& beam, const ViewCone& cone);

// Minimum angle between the ray p(t) = p0 + t * dp (t in [0, t_max]) and a
// fixed direction, with the minimizing t. Used for track extrapolation.
struct RayAngle {
  double angle_deg = 0.0;
  double t = 0.0;
};
RayAngle min_angle_along_ray(const Vec3& p0, const Vec3& dp, double t_max, const Vec3& direction);

}  // namespace mcao::salsa
