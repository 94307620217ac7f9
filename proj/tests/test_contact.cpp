#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mdscache/contact.hpp"

using namespace mdscache;

namespace {

MobilityParams reference_params() {
  return MobilityParams{};  // 0.3..2.5 m/s, r=10, rho=30, M=n=500
}

}  // namespace

TEST_CASE("relative speed of two uniform walkers") {
  // With uniform headings the mean relative speed is (4/pi) times the mean
  // individual speed: 2 (s_min + s_max) / pi.
  CHECK(relative_speed(M_PI / 2, M_PI / 2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(relative_speed(0.3, 2.5) == doctest::Approx(1.78253536262923).epsilon(1e-12));
  CHECK_THROWS_AS(relative_speed(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(relative_speed(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("contact process rates at the reference operating point") {
  const ContactRates rates = contact_rates(reference_params());
  CHECK(rates.relative_speed == doctest::Approx(1.78253536262923).epsilon(1e-12));
  CHECK(rates.arrival_rate == doctest::Approx(1.57295508650083).epsilon(1e-9));
  CHECK(rates.departure_rate == doctest::Approx(0.113479725679418).epsilon(1e-9));
  CHECK(rates.expected_contact_time == doctest::Approx(8.81214678668693).epsilon(1e-9));

  // A single pair meets at rate 2 r s / A.
  MobilityParams pair = reference_params();
  pair.num_devices = 2;
  pair.code_length = 1;
  CHECK(contact_rates(pair).arrival_rate == doctest::Approx(0.00315221460220606).epsilon(1e-9));
}

TEST_CASE("rate scaling in speed and geometry") {
  MobilityParams base = reference_params();
  const ContactRates r1 = contact_rates(base);

  MobilityParams fast = base;
  fast.s_min *= 2.0;
  fast.s_max *= 2.0;
  const ContactRates r2 = contact_rates(fast);
  CHECK(r2.relative_speed == doctest::Approx(2.0 * r1.relative_speed).epsilon(1e-14));
  CHECK(r2.arrival_rate == doctest::Approx(2.0 * r1.arrival_rate).epsilon(1e-14));
  CHECK(r2.departure_rate == doctest::Approx(2.0 * r1.departure_rate).epsilon(1e-14));
  CHECK(r2.expected_contact_time == doctest::Approx(0.5 * r1.expected_contact_time).epsilon(1e-14));

  // The mean number in range lambda/mu = (M-1) pi r^2 / A is a pure
  // geometry ratio; speeds must cancel exactly.
  const double occupancy1 = r1.arrival_rate / r1.departure_rate;
  const double occupancy2 = r2.arrival_rate / r2.departure_rate;
  CHECK(occupancy1 == doctest::Approx(499.0 * 100.0 / 3600.0).epsilon(1e-12));
  CHECK(occupancy2 == doctest::Approx(occupancy1).epsilon(1e-14));
}

TEST_CASE("parameter validation") {
  MobilityParams p = reference_params();
  p.s_min = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.s_max = 0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.r = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.r = M_PI * p.rho + 1.0;  // more than half the circumference
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.num_devices = 1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.code_length = p.num_devices + 1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.omega = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_NOTHROW(reference_params().validate());

  CHECK_THROWS_AS(contact_count_distribution(reference_params(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(contact_count_distribution(reference_params(), 1.0), std::invalid_argument);
}

TEST_CASE("poisson head moments") {
  // weighted = sum_{j<k} j q_j telescopes to mean * Pr(J <= k-2).
  const double mean = 3.7;
  for (long long k : {1LL, 2LL, 5LL, 11LL}) {
    const PoissonHead head = poisson_head_moments(mean, k);
    const PoissonHead prev = poisson_head_moments(mean, k - 1);
    CHECK(head.weighted == doctest::Approx(mean * prev.prob).epsilon(1e-12));
  }

  // Direct summation oracle.
  double qj = std::exp(-mean), prob = 0.0, weighted = 0.0;
  for (long long j = 0; j < 5; ++j) {
    if (j > 0) qj *= mean / j;
    prob += qj;
    weighted += j * qj;
  }
  const PoissonHead head5 = poisson_head_moments(mean, 5);
  CHECK(head5.prob == doctest::Approx(prob).epsilon(1e-13));
  CHECK(head5.weighted == doctest::Approx(weighted).epsilon(1e-13));

  CHECK(poisson_head_moments(mean, 0).prob == 0.0);
  CHECK(poisson_head_moments(mean, 0).weighted == 0.0);
  CHECK(poisson_head_moments(0.0, 3).prob == 1.0);
  CHECK(poisson_head_moments(0.0, 3).weighted == 0.0);
  CHECK_THROWS_AS(poisson_head_moments(-1.0, 3), std::invalid_argument);

  // Large means route through log space without losing the head mass.
  const PoissonHead big = poisson_head_moments(700.0, 701);
  CHECK(big.prob == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("contact count distribution at the reference point") {
  const ContactModel model = contact_count_distribution(reference_params(), 1e-12);
  CHECK(model.mean_in_range == doctest::Approx(499.0 * 100.0 / 3600.0).epsilon(1e-12));
  CHECK(model.caching_fraction == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(model.mean_caching_in_range == doctest::Approx(13.8611111111111).epsilon(1e-12));
  CHECK(model.q[0] == doctest::Approx(9.55423526899488e-07).epsilon(1e-9));
  CHECK(model.tail_mass < 1e-12);
  CHECK(model.tail_mass >= 0.0);

  // Mass and mean are conserved across head + tail.
  double mass = model.tail_mass, mean = model.tail_mass * model.tail_mean_count;
  for (long long j = 0; j <= model.j_max(); ++j) {
    mass += model.q[static_cast<std::size_t>(j)];
    mean += j * model.q[static_cast<std::size_t>(j)];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean == doctest::Approx(model.mean_caching_in_range).epsilon(1e-9));
}

TEST_CASE("contact count distribution for sparse caching") {
  // n << M: the caching thin-out is pure Poisson thinning.
  MobilityParams p = reference_params();
  p.code_length = 36;  // mean (lambda/mu) * 36/500 close to 1
  const ContactModel model = contact_count_distribution(p, 1e-12);
  const double m = model.mean_caching_in_range;
  CHECK(m == doctest::Approx(499.0 / 500.0).epsilon(1e-12));
  CHECK(model.q[0] == doctest::Approx(std::exp(-m)).epsilon(1e-12));

  // With such a small mean the truncated tail is negligible and the head
  // carries the variance too.
  double var = model.tail_mass * (model.tail_mean_count - m) * (model.tail_mean_count - m);
  for (long long j = 0; j <= model.j_max(); ++j) {
    var += (j - m) * (j - m) * model.q[static_cast<std::size_t>(j)];
  }
  CHECK(var == doctest::Approx(m).epsilon(1e-8));
}

TEST_CASE("head moment queries, stored and past the table") {
  const ContactModel model = contact_count_distribution(reference_params(), 1e-6);
  CHECK(model.head(0).prob == 0.0);
  CHECK(model.head(1).prob == doctest::Approx(model.q[0]).epsilon(1e-14));
  CHECK(model.head(1).weighted == 0.0);

  const PoissonHead h3 = model.head(3);
  CHECK(h3.prob == doctest::Approx(model.q[0] + model.q[1] + model.q[2]).epsilon(1e-13));
  CHECK(h3.weighted == doctest::Approx(model.q[1] + 2.0 * model.q[2]).epsilon(1e-13));

  // Far past the truncation point the query falls back to direct summation
  // instead of being capped at the stored table.
  const PoissonHead far = model.head(model.j_max() + 200);
  CHECK(far.prob == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(far.weighted == doctest::Approx(model.mean_caching_in_range).epsilon(1e-9));
  CHECK(far.prob > model.head_prob.back());
}

TEST_CASE("short range advisory") {
  CHECK(reference_params().short_range_ok());
  MobilityParams wide = reference_params();
  wide.r = 20.0;
  CHECK_FALSE(wide.short_range_ok());
}
