#include "mdscache/sphere.hpp"

namespace mdscache {

SpherePoint sample_uniform_point(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

SpherePoint position_on_leg(const SpherePoint& origin, const SpherePoint& target, double f) {
  if (f < 0.0 || f > 1.0) throw std::invalid_argument("leg fraction outside [0, 1]");
  const double omega = angle_between(origin, target);
  if (omega < 1e-13) return origin;  // degenerate leg, nowhere to go
  if (M_PI - omega < 1e-9) throw AntipodalLegError();
  // Spherical linear interpolation; renormalize to undo rounding drift.
  const double s = std::sin(omega);
  const double wa = std::sin((1.0 - f) * omega) / s;
  const double wb = std::sin(f * omega) / s;
  return normalized({wa * origin.x + wb * target.x,
                     wa * origin.y + wb * target.y,
                     wa * origin.z + wb * target.z});
}

}  // namespace mdscache
