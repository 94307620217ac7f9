#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mdscache/cache_model.hpp"
#include "mdscache/rng.hpp"

using namespace mdscache;

namespace {

SystemConfig small_config() {
  SystemConfig cfg;
  cfg.num_devices = 60;
  cfg.code_length = 20;
  cfg.library_size = 8;
  cfg.sigma = 0.7;
  cfg.theta = 0.8;
  cfg.beta_d = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("zipf popularity") {
  const Popularity p = zipf_popularity(3, 1.0);
  CHECK(p[0] == doctest::Approx(6.0 / 11.0).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(3.0 / 11.0).epsilon(1e-15));
  CHECK(p[2] == doctest::Approx(2.0 / 11.0).epsilon(1e-15));

  const Popularity flat = zipf_popularity(7, 0.0);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    CHECK(flat[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    CHECK(flat[i] == flat[0]);
  }

  // A sigma just above zero behaves like uniform.
  const Popularity nearly = zipf_popularity(5, 1e-9);
  CHECK(nearly[0] == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(nearly[4] == doctest::Approx(0.2).epsilon(1e-8));

  const Popularity skewed = zipf_popularity(50, 1.2);
  double sum = 0.0;
  for (std::size_t i = 0; i < skewed.size(); ++i) {
    sum += skewed[i];
    if (i > 0) CHECK(skewed[i] <= skewed[i - 1]);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(zipf_popularity(0, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(zipf_popularity(10, 1.6), std::invalid_argument);
  CHECK_THROWS_AS(zipf_popularity(10, -0.1), std::invalid_argument);

  CHECK_THROWS_AS(Popularity({0.2, 0.3, 0.5}), std::invalid_argument);   // increasing
  CHECK_THROWS_AS(Popularity({0.9, -0.1, 0.2}), std::invalid_argument);  // negative
  CHECK_THROWS_AS(Popularity({0.5, 0.4}), std::invalid_argument);        // sum != 1
  CHECK_THROWS_AS(Popularity(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("allocation grids and budgets") {
  const Allocation a = Allocation::from_k({4, 0, 2}, 8);
  CHECK(a.grid_valid);
  CHECK(a.alpha[0] == 0.25);
  CHECK(a.alpha[1] == 0.0);
  CHECK(a.alpha[2] == 0.5);
  CHECK(a.total() == doctest::Approx(0.75).epsilon(1e-15));

  CHECK_THROWS_AS(Allocation::from_k({-1}, 8), std::invalid_argument);
  CHECK_THROWS_AS(Allocation::from_k({9}, 8), std::invalid_argument);
  CHECK_THROWS_AS(Allocation::continuous({1.2}), std::invalid_argument);
  CHECK_THROWS_AS(Allocation::continuous({-0.1}), std::invalid_argument);

  // The budget check and its slack are a single shared constant: totals
  // within kBudgetSlack of beta are in, anything beyond is out.
  CHECK(Allocation::continuous({0.5 + 0.5e-9}).within_budget(0.5));
  CHECK_FALSE(Allocation::continuous({0.5 + 2e-9}).within_budget(0.5));

  const Allocation pop = popular_allocation(5, 2.3);
  CHECK(pop.grid_valid);
  CHECK(pop.alpha == std::vector<double>{1.0, 1.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(popular_allocation(2, 3.5), std::invalid_argument);
  CHECK_THROWS_AS(popular_allocation(2, -1.0), std::invalid_argument);
}

TEST_CASE("system config validation") {
  CHECK_NOTHROW(SystemConfig{}.validate());
  SystemConfig cfg;
  cfg.sigma = 2.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.theta = 0.4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.theta = 1.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.beta_d = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.library_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.code_length = cfg.num_devices + 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.file_size_bits = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  SystemConfig beta;
  beta.num_devices = 500;
  beta.code_length = 100;
  beta.beta_d = 2.0;
  CHECK(beta.beta() == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(beta.system_request_rate() == doctest::Approx(50.0).epsilon(1e-15));
}

TEST_CASE("download split for one request") {
  // alpha = 1/4: with j in-range cachers the requester recovers j alpha
  // (plus its own packet when it caches the file).
  const DownloadSplit j2 = download_fractions(0.25, 4, 2);
  CHECK(j2.bs_cached == 0.25);
  CHECK(j2.bs_uncached == 0.5);
  CHECK(j2.d2d_cached == 0.5);
  CHECK(j2.d2d_uncached == 0.5);

  // One short of full recovery without the base station.
  const DownloadSplit j3 = download_fractions(0.25, 4, 3);
  CHECK(j3.bs_cached == 0.0);
  CHECK(j3.bs_uncached == 0.25);
  CHECK(j3.d2d_cached == 0.75);
  CHECK(j3.d2d_uncached == 0.75);

  // Enough cachers around: nothing from the base station.
  const DownloadSplit j4 = download_fractions(0.25, 4, 4);
  CHECK(j4.bs_cached == 0.0);
  CHECK(j4.bs_uncached == 0.0);
  CHECK(j4.d2d_cached == 0.75);
  CHECK(j4.d2d_uncached == 1.0);

  // Uncached file comes entirely from the base station.
  const DownloadSplit none = download_fractions(0.0, 0, 7);
  CHECK(none.bs_cached == 1.0);
  CHECK(none.bs_uncached == 1.0);
  CHECK(none.d2d_cached == 0.0);
  CHECK(none.d2d_uncached == 0.0);

  // Conservation: cached requesters fetch 1 - alpha in total, uncached 1.
  for (int k = 1; k <= 6; ++k) {
    for (long long j = 0; j <= 8; ++j) {
      const double alpha = 1.0 / k;
      const DownloadSplit s = download_fractions(alpha, k, j);
      CHECK(s.bs_cached + s.d2d_cached == doctest::Approx(1.0 - alpha).epsilon(1e-14));
      CHECK(s.bs_uncached + s.d2d_uncached == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(s.bs_cached >= 0.0);
      CHECK(s.bs_uncached >= 0.0);
    }
  }

  CHECK_THROWS_AS(download_fractions(-0.1, 2), std::invalid_argument);
  CHECK_THROWS_AS(download_fractions(1.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(download_fractions(0.5, -1), std::invalid_argument);
}

TEST_CASE("rates at the trivial corners") {
  SystemConfig cfg = small_config();
  const Popularity pop = zipf_popularity(cfg.library_size, cfg.sigma);
  const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);

  // Nothing cached: every request is a full downlink transfer.
  const Allocation empty = Allocation::from_k(std::vector<int>(cfg.library_size, 0), cfg.code_length);
  CHECK(downlink_rate(cfg, pop, contact, empty) ==
        doctest::Approx(cfg.system_request_rate()).epsilon(1e-12));
  CHECK(d2d_rate(cfg, pop, contact, empty) == 0.0);

  // Single fully replicated file on every device: nobody transfers anything.
  SystemConfig full = small_config();
  full.library_size = 1;
  full.code_length = full.num_devices;
  const ContactModel c2 = contact_count_distribution(full.mobility(), full.trunc_eps);
  const Popularity one = zipf_popularity(1, 0.7);
  const Allocation ones = Allocation::from_k({1}, full.code_length);
  CHECK(downlink_rate(full, one, c2, ones) == 0.0);
  CHECK(d2d_rate(full, one, c2, ones) == 0.0);
}

TEST_CASE("rates scale linearly in the request rate") {
  SystemConfig cfg = small_config();
  const Popularity pop = zipf_popularity(cfg.library_size, cfg.sigma);
  const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);
  const Allocation alloc = Allocation::from_k({1, 2, 4, 8, 0, 0, 0, 0}, cfg.code_length);

  SystemConfig twice = cfg;
  twice.omega *= 2.0;
  const ContactModel c2 = contact_count_distribution(twice.mobility(), twice.trunc_eps);
  CHECK(downlink_rate(twice, pop, c2, alloc) == 2.0 * downlink_rate(cfg, pop, contact, alloc));
  CHECK(d2d_rate(twice, pop, c2, alloc) == 2.0 * d2d_rate(cfg, pop, contact, alloc));
}

TEST_CASE("weighted rate equals its max-form evaluation on the grid") {
  SystemConfig cfg = small_config();
  const Popularity pop = zipf_popularity(cfg.library_size, cfg.sigma);
  const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);

  Rng rng(515253);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> k(static_cast<std::size_t>(cfg.library_size));
    for (int& ki : k) ki = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.code_length + 1)));
    const Allocation alloc = Allocation::from_k(k, cfg.code_length);
    const RateBreakdown rates = weighted_rate(cfg, pop, contact, alloc);
    const double maxform = weighted_rate_maxform(cfg, pop, contact, alloc);
    CHECK(rates.weighted ==
          doctest::Approx(cfg.theta * rates.downlink + (1.0 - cfg.theta) * rates.d2d)
              .epsilon(1e-14));
    CHECK(std::fabs(rates.weighted - maxform) <= 1e-10 * std::max(1.0, std::fabs(maxform)));

    double per_file_sum = 0.0;
    for (double v : rates.per_file) per_file_sum += v;
    CHECK(per_file_sum == doctest::Approx(rates.weighted).epsilon(1e-12));
  }
}

TEST_CASE("max-form objective is convex in the allocation") {
  SystemConfig cfg = small_config();
  const Popularity pop = zipf_popularity(cfg.library_size, cfg.sigma);
  const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);

  Rng rng(606162);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(static_cast<std::size_t>(cfg.library_size));
    std::vector<double> b(a.size()), mid(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.uniform(0.0, 1.0);
      b[i] = rng.uniform(0.0, 1.0);
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    const double ha = weighted_rate_maxform(cfg, pop, contact, Allocation::continuous(a));
    const double hb = weighted_rate_maxform(cfg, pop, contact, Allocation::continuous(b));
    const double hm = weighted_rate_maxform(cfg, pop, contact, Allocation::continuous(mid));
    CHECK(hm <= 0.5 * (ha + hb) + 1e-10 * std::max(1.0, ha + hb));
  }
}

TEST_CASE("more cache on a file never hurts the downlink") {
  SystemConfig cfg;
  cfg.num_devices = 500;
  cfg.code_length = 500;
  cfg.library_size = 1;
  const Popularity pop = zipf_popularity(1, 0.7);
  const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);

  double previous = downlink_rate(cfg, pop, contact, Allocation::from_k({0}, cfg.code_length));
  for (int k = cfg.code_length; k >= 1; --k) {  // alpha ascending 1/n .. 1
    const double f = downlink_rate(cfg, pop, contact, Allocation::from_k({k}, cfg.code_length));
    CHECK(f <= previous + 1e-12);
    previous = f;
  }
}

TEST_CASE("d2d traffic grows with cache share when cachers are sparse") {
  // In the sparse regime (few cachers in range at a time) handing a file a
  // larger fraction strictly moves traffic from the base station to d2d.
  SystemConfig cfg;
  cfg.num_devices = 200;
  cfg.code_length = 10;
  cfg.library_size = 1;
  const Popularity pop = zipf_popularity(1, 0.7);
  const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);

  double previous = 0.0;
  for (int k = cfg.code_length; k >= 1; --k) {
    const double g = d2d_rate(cfg, pop, contact, Allocation::from_k({k}, cfg.code_length));
    CHECK(g >= previous - 1e-12);
    previous = g;
  }
}
