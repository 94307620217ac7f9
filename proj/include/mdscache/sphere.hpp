#pragma once

#include <cmath>
#include <stdexcept>

#include "mdscache/rng.hpp"

namespace mdscache {

// Position on the unit sphere, stored as a unit 3-vector. Working with
// vectors instead of latitude/longitude keeps every formula free of
// pole singularities.
struct SpherePoint {
  double x = 0.0, y = 0.0, z = 1.0;
};

// Sphere of radius rho (meters).
struct SphereConfig {
  double rho = 30.0;

  double area() const { return 4.0 * M_PI * rho * rho; }
};

// Thrown by position_on_leg when origin and target are (numerically)
// antipodal: the great-circle path between them is not unique.
struct AntipodalLegError : std::domain_error {
  AntipodalLegError() : std::domain_error("antipodal leg has no unique great-circle path") {}
};

inline double dot(const SpherePoint& a, const SpherePoint& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline SpherePoint cross(const SpherePoint& a, const SpherePoint& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const SpherePoint& a) { return std::sqrt(dot(a, a)); }

inline SpherePoint normalized(const SpherePoint& a) {
  const double n = norm(a);
  if (n <= 0.0) throw std::invalid_argument("cannot normalize zero vector");
  return {a.x / n, a.y / n, a.z / n};
}

// Central angle between two unit vectors, in [0, pi]. Uses atan2 of the
// cross/dot pair, which stays accurate near 0 and pi where plain acos of
// a (possibly out-of-range) dot product loses digits.
inline double angle_between(const SpherePoint& a, const SpherePoint& b) {
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

// Great-circle distance in meters.
inline double great_circle_distance(const SpherePoint& a, const SpherePoint& b,
                                    const SphereConfig& sphere) {
  return sphere.rho * angle_between(a, b);
}

// Area-uniform random point (uniform z, uniform longitude).
SpherePoint sample_uniform_point(Rng& rng);

// Point a fraction f in [0, 1] of the way from origin to target along the
// shorter great-circle arc; the parameterization is proportional to arc
// length. Throws AntipodalLegError when the arc is degenerate.
SpherePoint position_on_leg(const SpherePoint& origin, const SpherePoint& target, double f);

}  // namespace mdscache
