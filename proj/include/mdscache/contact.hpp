#pragma once

#include <cstdint>
#include <vector>

namespace mdscache {

// Mobility and geometry inputs for the contact process. Speeds are in m/s,
// radii in meters. M is the number of devices, n the number of devices that
// cache (a coded packet of) any given file.
struct MobilityParams {
  double s_min = 0.3;
  double s_max = 2.5;
  double r = 10.0;     // communication range (great-circle)
  double rho = 30.0;   // sphere radius
  int num_devices = 500;
  int code_length = 500;  // n
  double omega = 0.1;     // per-device request rate (1/s)

  void validate() const;  // throws std::invalid_argument on bad inputs

  // The closed-form contact model assumes the range is small against the
  // sphere; beyond roughly r/(2 rho) > 0.2 it degrades. Advisory only.
  bool short_range_ok() const { return r / (2.0 * rho) <= 0.2; }
};

// Pairwise contact process rates for one tagged device.
struct ContactRates {
  double relative_speed;         // E|v_rel| for two random-direction walkers
  double arrival_rate;           // lambda: contacts/s with the other M-1 devices
  double departure_rate;         // mu: 1 / E[contact duration]
  double expected_contact_time;  // 1 / mu
};

// Mean relative speed of two devices with independent uniform speeds in
// [s_min, s_max] and independent uniform headings: 2 (s_max + s_min) / pi.
double relative_speed(double s_min, double s_max);

ContactRates contact_rates(const MobilityParams& params);

// Head of a Poisson distribution: prob = Pr(J <= k-1) and
// weighted = sum_{j < k} j Pr(J = j) = mean * Pr(J <= k-2).
struct PoissonHead {
  double prob = 0.0;
  double weighted = 0.0;
};

PoissonHead poisson_head_moments(double mean, long long k);

// Distribution of the number of caching devices in range of a requester at a
// random time: Poisson with mean (lambda/mu) * (n/M), truncated where the
// upper tail drops below trunc_eps. Prefix sums make repeated head-moment
// queries O(1).
struct ContactModel {
  double relative_speed = 0.0;
  double arrival_rate = 0.0;
  double departure_rate = 0.0;
  double mean_in_range = 0.0;          // lambda / mu
  double caching_fraction = 0.0;       // n / M
  double mean_caching_in_range = 0.0;  // (lambda/mu) * (n/M)
  double trunc_eps = 1e-12;

  std::vector<double> q;            // q[j] = Pr(J = j), j = 0..J_max
  std::vector<double> head_prob;    // head_prob[j]   = Pr(J <= j)
  std::vector<double> head_weight;  // head_weight[j] = sum_{t<=j} t q_t
  double tail_mass = 0.0;           // Pr(J > J_max)
  double tail_mean_count = 0.0;     // E[J | J > J_max] (0 when tail empty)

  long long j_max() const { return static_cast<long long>(q.size()) - 1; }

  // Head moments for arbitrary k; falls back to direct summation past the
  // stored table so results are never truncation-limited.
  PoissonHead head(long long k) const;
};

ContactModel contact_count_distribution(const MobilityParams& params, double trunc_eps = 1e-12);

}  // namespace mdscache
