#include "mdscache/contact.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdscache {
namespace {

// Compensated accumulator; the q_j prefix sums have to resolve tails around
// 1e-12, which plain summation of ~1e3 terms would start to blur.
struct Kahan {
  double sum = 0.0, carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Poisson pmf at j, robust for large means where exp(-mean) underflows.
double poisson_pmf(double mean, long long j) {
  return std::exp(-mean + static_cast<double>(j) * std::log(mean) - std::lgamma(static_cast<double>(j) + 1.0));
}

constexpr double kLogSpaceMean = 650.0;  // past this exp(-mean) loses headroom

}  // namespace

void MobilityParams::validate() const {
  if (!(s_min > 0.0) || !(s_max >= s_min)) {
    throw std::invalid_argument("speed range requires 0 < s_min <= s_max");
  }
  if (!(r > 0.0) || !(rho > 0.0)) throw std::invalid_argument("r and rho must be positive");
  if (r > M_PI * rho) throw std::invalid_argument("range r exceeds half circumference pi*rho");
  if (num_devices < 2) throw std::invalid_argument("need at least 2 devices");
  if (code_length < 1 || code_length > num_devices) {
    throw std::invalid_argument("code length n must satisfy 1 <= n <= M");
  }
  if (!(omega > 0.0)) throw std::invalid_argument("request rate omega must be positive");
}

double relative_speed(double s_min, double s_max) {
  if (!(s_min > 0.0) || !(s_max >= s_min)) {
    throw std::invalid_argument("speed range requires 0 < s_min <= s_max");
  }
  return 2.0 * (s_max + s_min) / M_PI;
}

ContactRates contact_rates(const MobilityParams& params) {
  params.validate();
  const double s = relative_speed(params.s_min, params.s_max);
  const double area = 4.0 * M_PI * params.rho * params.rho;
  const double lambda = (params.num_devices - 1) * 2.0 * params.r * s / area;
  const double mu = 2.0 * s / (M_PI * params.r);
  return {s, lambda, mu, 1.0 / mu};
}

PoissonHead poisson_head_moments(double mean, long long k) {
  if (mean < 0.0) throw std::invalid_argument("poisson mean must be nonnegative");
  PoissonHead out;
  if (k <= 0) return out;
  if (mean == 0.0) return {1.0, 0.0};

  const bool log_space = mean > kLogSpaceMean;
  Kahan prob, weighted;
  double qj = log_space ? 0.0 : std::exp(-mean);
  for (long long j = 0; j < k; ++j) {
    if (log_space) {
      qj = poisson_pmf(mean, j);
    } else if (j > 0) {
      qj *= mean / static_cast<double>(j);
    }
    prob.add(qj);
    weighted.add(static_cast<double>(j) * qj);
    // Past the mode the pmf decays geometrically; once it is far below any
    // tolerance we care about the remaining head terms cannot matter.
    if (static_cast<double>(j) > mean && qj < 1e-22) break;
  }
  out.prob = prob.sum;
  out.weighted = weighted.sum;
  return out;
}

PoissonHead ContactModel::head(long long k) const {
  if (k <= 0) return {0.0, 0.0};
  if (k - 1 <= j_max()) {
    const auto idx = static_cast<std::size_t>(k - 1);
    return {head_prob[idx], head_weight[idx]};
  }
  return poisson_head_moments(mean_caching_in_range, k);
}

ContactModel contact_count_distribution(const MobilityParams& params, double trunc_eps) {
  params.validate();
  if (!(trunc_eps > 0.0) || trunc_eps >= 1.0) {
    throw std::invalid_argument("trunc_eps must lie in (0, 1)");
  }

  ContactModel model;
  const ContactRates rates = contact_rates(params);
  model.relative_speed = rates.relative_speed;
  model.arrival_rate = rates.arrival_rate;
  model.departure_rate = rates.departure_rate;
  model.mean_in_range = rates.arrival_rate / rates.departure_rate;
  model.caching_fraction = static_cast<double>(params.code_length) / params.num_devices;
  model.mean_caching_in_range = model.mean_in_range * model.caching_fraction;
  model.trunc_eps = trunc_eps;

  const double m = model.mean_caching_in_range;
  const bool log_space = m > kLogSpaceMean;
  const double j_cap = m + 300.0 * std::sqrt(m + 1.0) + 500.0;

  Kahan cum, weight;
  double qj = log_space ? poisson_pmf(m, 0) : std::exp(-m);
  long long j = 0;
  for (;;) {
    cum.add(qj);
    weight.add(static_cast<double>(j) * qj);
    model.q.push_back(qj);
    model.head_prob.push_back(cum.sum);
    model.head_weight.push_back(weight.sum);
    if (1.0 - cum.sum <= trunc_eps) break;
    if (static_cast<double>(j) > j_cap) {
      throw std::runtime_error("contact count distribution failed to reach requested tail mass");
    }
    ++j;
    qj = log_space ? poisson_pmf(m, j) : qj * m / static_cast<double>(j);
  }

  model.tail_mass = std::max(0.0, 1.0 - cum.sum);
  const double tail_weight = std::max(0.0, m - weight.sum);
  if (model.tail_mass > 0.0) {
    model.tail_mean_count =
        std::max(static_cast<double>(j + 1), tail_weight / model.tail_mass);
  }
  return model;
}

}  // namespace mdscache
