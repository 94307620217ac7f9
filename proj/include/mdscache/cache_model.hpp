#pragma once

#include <cstdint>
#include <vector>

#include "mdscache/contact.hpp"

namespace mdscache {

// Budget bookkeeping tolerance: a cache allocation is considered feasible when
// sum(alpha) <= beta + kBudgetSlack. Every feasibility check in the library
// and tests uses this same constant so solver and oracle never disagree at
// the boundary.
inline constexpr double kBudgetSlack = 1e-9;

// Full system description. Each of the M devices requests files at rate omega
// from a library of N files; a cached file is spread over n devices as coded
// packets of size alpha = 1/k (an (n, k) MDS code), and each device can hold
// beta_d files' worth of packets.
struct SystemConfig {
  double rho = 30.0;
  double r = 10.0;
  int num_devices = 500;   // M
  int library_size = 100;  // N
  double sigma = 0.7;      // popularity skew
  double s_min = 0.3;
  double s_max = 2.5;
  double omega = 0.1;
  double theta = 1.0;           // downlink weight in h = theta f + (1-theta) g
  double beta_d = 1.0;          // per-device cache size, in files
  int code_length = 500;        // n
  double file_size_bits = 1.0;  // informational; rates are in file-equivalents
  double trunc_eps = 1e-12;

  // Library-wide cache budget beta = beta_d * M / n.
  double beta() const { return beta_d * num_devices / static_cast<double>(code_length); }

  double system_request_rate() const { return num_devices * omega; }

  MobilityParams mobility() const {
    return {s_min, s_max, r, rho, num_devices, code_length, omega};
  }

  void validate() const;  // throws std::invalid_argument
};

// File request popularity; entry i is the probability that a request is for
// file i. Non-increasing, sums to one.
class Popularity {
 public:
  explicit Popularity(std::vector<double> weights);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& weights() const { return p_; }

 private:
  std::vector<double> p_;
};

// Zipf popularity p_i proportional to 1/i^sigma, sigma in [0, 1.5].
Popularity zipf_popularity(int library_size, double sigma);

// Per-file cache fractions. alpha[i] = 1/k[i] for cached files; k[i] == 0
// codes alpha[i] == 0 (not cached). Grid-valid allocations carry the exact
// integer k so downstream branch decisions never depend on floating-point
// reciprocals.
struct Allocation {
  std::vector<double> alpha;
  std::vector<int> k;  // meaningful iff grid_valid
  bool grid_valid = false;

  static Allocation from_k(std::vector<int> k_values, int code_length);
  static Allocation continuous(std::vector<double> alpha_values);

  std::size_t size() const { return alpha.size(); }
  double total() const;  // sum of alpha, left-to-right

  bool within_budget(double beta) const { return total() <= beta + kBudgetSlack; }
};

// Cache the floor(beta) most popular files in full.
Allocation popular_allocation(int library_size, double beta);

// How a request is served, by source, as fractions of the file size.
// "cached" refers to whether the requester itself holds a packet of the file.
struct DownloadSplit {
  double bs_cached = 0.0;
  double bs_uncached = 0.0;
  double d2d_cached = 0.0;
  double d2d_uncached = 0.0;
};

// Service split for a file cached at fraction alpha when j other caching
// devices are in range. alpha == 0 means everything comes from the base
// station. The overload with k uses the exact integer reciprocal for the
// branch test (alpha == 1/k), which matters right at j == 1/alpha.
DownloadSplit download_fractions(double alpha, long long in_range);
DownloadSplit download_fractions(double alpha, int k, long long in_range);

// Expected traffic rates in file-equivalents per second across the system.
struct RateBreakdown {
  double downlink = 0.0;  // f: base station -> devices
  double d2d = 0.0;       // g: device -> device
  double weighted = 0.0;  // h = theta f + (1 - theta) g
  std::vector<double> per_file;  // weighted contribution per file, sums to h
};

double downlink_rate(const SystemConfig& cfg, const Popularity& pop,
                     const ContactModel& contact, const Allocation& alloc);
double d2d_rate(const SystemConfig& cfg, const Popularity& pop,
                const ContactModel& contact, const Allocation& alloc);
RateBreakdown weighted_rate(const SystemConfig& cfg, const Popularity& pop,
                            const ContactModel& contact, const Allocation& alloc);

// The max-of-affine form of the weighted rate. Coincides with
// theta f + (1-theta) g on the allocation grid and is convex in alpha, which
// makes it the objective the optimizer works with for continuous allocations.
double weighted_rate_maxform(const SystemConfig& cfg, const Popularity& pop,
                             const ContactModel& contact, const Allocation& alloc);

}  // namespace mdscache
