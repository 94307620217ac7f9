#include "mdscache/cache_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mdscache {
namespace {

// Soft ceiling for head-term counts so 1/alpha never overflows long long.
constexpr long long kHeadCap = 1LL << 62;

long long head_count_cases(double alpha, int k) {
  // Number of leading j terms on the "j < 1/alpha" branch.
  if (k > 0) return k;
  const double inv = 1.0 / alpha;
  if (inv >= static_cast<double>(kHeadCap)) return kHeadCap;
  return static_cast<long long>(std::ceil(inv));
}

long long head_count_maxform(double alpha, int k, double n_over_m) {
  // Number of leading j terms where the downlink branch dominates:
  // alpha (j + n/M) <= 1. On the grid this is exactly k.
  if (k > 0) return k;
  const double t = 1.0 / alpha - n_over_m;
  if (t < 0.0) return 0;
  if (t >= static_cast<double>(kHeadCap)) return kHeadCap;
  return static_cast<long long>(std::floor(t)) + 1;
}

struct FileTerms {
  double downlink = 0.0;  // per-request downlink fraction for this file
  double d2d = 0.0;
};

FileTerms file_terms(double alpha, int k, const ContactModel& contact) {
  if (alpha <= 0.0) return {1.0, 0.0};
  const double n_over_m = contact.caching_fraction;
  const PoissonHead head = contact.head(head_count_cases(alpha, k));
  FileTerms out;
  out.downlink = head.prob * (1.0 - alpha * n_over_m) - alpha * head.weighted;
  out.d2d = alpha * head.weighted + (1.0 - head.prob) * (1.0 - alpha * n_over_m);
  return out;
}

double maxform_term(double alpha, int k, double theta, const ContactModel& contact) {
  if (alpha <= 0.0) return theta;
  const double n_over_m = contact.caching_fraction;
  const PoissonHead head = contact.head(head_count_maxform(alpha, k, n_over_m));
  return alpha * (1.0 - 2.0 * theta) * head.weighted +
         theta * (1.0 - alpha * n_over_m) * head.prob +
         (1.0 - theta) * (1.0 - alpha * n_over_m) * (1.0 - head.prob);
}

void check_sizes(const SystemConfig& cfg, const Popularity& pop, const Allocation& alloc) {
  if (pop.size() != static_cast<std::size_t>(cfg.library_size) || alloc.size() != pop.size()) {
    throw std::invalid_argument("popularity/allocation size does not match library size");
  }
}

int k_of(const Allocation& alloc, std::size_t i) {
  return alloc.grid_valid ? alloc.k[i] : 0;
}

}  // namespace

void SystemConfig::validate() const {
  mobility().validate();  // covers rho, r, speeds, M, n, omega
  if (library_size < 1) throw std::invalid_argument("library size must be at least 1");
  if (!(sigma >= 0.0) || sigma > 1.5) {
    throw std::invalid_argument("popularity skew sigma must lie in [0, 1.5]");
  }
  if (!(theta >= 0.5) || theta > 1.0) throw std::invalid_argument("theta must lie in [0.5, 1]");
  if (!(beta_d > 0.0)) throw std::invalid_argument("per-device cache size beta_d must be positive");
  if (!(trunc_eps > 0.0) || trunc_eps >= 1.0) {
    throw std::invalid_argument("trunc_eps must lie in (0, 1)");
  }
  if (!(file_size_bits > 0.0)) throw std::invalid_argument("file size must be positive");
}

Popularity::Popularity(std::vector<double> weights) : p_(std::move(weights)) {
  if (p_.empty()) throw std::invalid_argument("popularity must have at least one entry");
  double sum = 0.0;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (!(p_[i] >= 0.0)) throw std::invalid_argument("popularity weights must be nonnegative");
    if (i > 0 && p_[i] > p_[i - 1] + 1e-12) {
      throw std::invalid_argument("popularity must be non-increasing");
    }
    sum += p_[i];
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("popularity must sum to 1");
}

Popularity zipf_popularity(int library_size, double sigma) {
  if (library_size < 1) throw std::invalid_argument("library size must be at least 1");
  if (!(sigma >= 0.0) || sigma > 1.5) {
    throw std::invalid_argument("popularity skew sigma must lie in [0, 1.5]");
  }
  std::vector<double> w(static_cast<std::size_t>(library_size));
  double sum = 0.0;
  for (int i = 0; i < library_size; ++i) {
    w[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -sigma);
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& x : w) x /= sum;
  return Popularity(std::move(w));
}

Allocation Allocation::from_k(std::vector<int> k_values, int code_length) {
  Allocation out;
  out.k = std::move(k_values);
  out.alpha.resize(out.k.size());
  for (std::size_t i = 0; i < out.k.size(); ++i) {
    const int k = out.k[i];
    if (k < 0 || k > code_length) {
      throw std::invalid_argument("allocation k must lie in {0, 1, ..., n}");
    }
    out.alpha[i] = k == 0 ? 0.0 : 1.0 / static_cast<double>(k);
  }
  out.grid_valid = true;
  return out;
}

Allocation Allocation::continuous(std::vector<double> alpha_values) {
  Allocation out;
  out.alpha = std::move(alpha_values);
  for (double a : out.alpha) {
    if (!(a >= 0.0) || a > 1.0 + 1e-12) {
      throw std::invalid_argument("allocation fractions must lie in [0, 1]");
    }
  }
  out.k.assign(out.alpha.size(), 0);
  out.grid_valid = false;
  return out;
}

double Allocation::total() const {
  double sum = 0.0;
  for (double a : alpha) sum += a;
  return sum;
}

Allocation popular_allocation(int library_size, double beta) {
  if (library_size < 1) throw std::invalid_argument("library size must be at least 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("budget beta must be nonnegative");
  const auto count = static_cast<long long>(std::floor(beta + kBudgetSlack));
  if (count > library_size) {
    throw std::invalid_argument("budget floor(beta) exceeds library size");
  }
  std::vector<int> k(static_cast<std::size_t>(library_size), 0);
  for (long long i = 0; i < count; ++i) k[static_cast<std::size_t>(i)] = 1;
  return Allocation::from_k(std::move(k), 1);
}

DownloadSplit download_fractions(double alpha, long long in_range) {
  return download_fractions(alpha, 0, in_range);
}

DownloadSplit download_fractions(double alpha, int k, long long in_range) {
  if (in_range < 0) throw std::invalid_argument("in-range count must be nonnegative");
  if (alpha < 0.0 || alpha > 1.0 + 1e-12) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  DownloadSplit split;
  if (alpha <= 0.0) {
    split.bs_cached = split.bs_uncached = 1.0;
    return split;
  }
  const double j = static_cast<double>(in_range);
  const bool head =
      k > 0 ? in_range < k : j < 1.0 / alpha;
  if (head) {
    split.bs_cached = std::max(0.0, 1.0 - alpha * (j + 1.0));
    split.bs_uncached = std::max(0.0, 1.0 - alpha * j);
  }
  split.d2d_cached = 1.0 - alpha - split.bs_cached;
  split.d2d_uncached = 1.0 - split.bs_uncached;
  return split;
}

double downlink_rate(const SystemConfig& cfg, const Popularity& pop,
                     const ContactModel& contact, const Allocation& alloc) {
  check_sizes(cfg, pop, alloc);
  double sum = 0.0;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    sum += pop[i] * file_terms(alloc.alpha[i], k_of(alloc, i), contact).downlink;
  }
  return cfg.system_request_rate() * sum;
}

double d2d_rate(const SystemConfig& cfg, const Popularity& pop,
                const ContactModel& contact, const Allocation& alloc) {
  check_sizes(cfg, pop, alloc);
  double sum = 0.0;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    sum += pop[i] * file_terms(alloc.alpha[i], k_of(alloc, i), contact).d2d;
  }
  return cfg.system_request_rate() * sum;
}

RateBreakdown weighted_rate(const SystemConfig& cfg, const Popularity& pop,
                            const ContactModel& contact, const Allocation& alloc) {
  check_sizes(cfg, pop, alloc);
  const double rate = cfg.system_request_rate();
  RateBreakdown out;
  out.per_file.resize(alloc.size());
  double f = 0.0, g = 0.0;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    const FileTerms terms = file_terms(alloc.alpha[i], k_of(alloc, i), contact);
    f += pop[i] * terms.downlink;
    g += pop[i] * terms.d2d;
    out.per_file[i] = rate * pop[i] * (cfg.theta * terms.downlink + (1.0 - cfg.theta) * terms.d2d);
  }
  out.downlink = rate * f;
  out.d2d = rate * g;
  out.weighted = cfg.theta * out.downlink + (1.0 - cfg.theta) * out.d2d;

  if (alloc.grid_valid) {
    // On the grid the two evaluation routes are algebraically identical;
    // disagreement would mean an implementation bug, not an input problem.
    const double max_form = weighted_rate_maxform(cfg, pop, contact, alloc);
    const double scale = std::max({1.0, std::fabs(out.weighted), std::fabs(max_form)});
    if (std::fabs(out.weighted - max_form) > 1e-10 * scale) {
      throw std::logic_error("weighted rate: breakdown and max-form evaluations disagree");
    }
  }
  return out;
}

double weighted_rate_maxform(const SystemConfig& cfg, const Popularity& pop,
                             const ContactModel& contact, const Allocation& alloc) {
  check_sizes(cfg, pop, alloc);
  double sum = 0.0;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    sum += pop[i] * maxform_term(alloc.alpha[i], k_of(alloc, i), cfg.theta, contact);
  }
  return cfg.system_request_rate() * sum;
}

}  // namespace mdscache
