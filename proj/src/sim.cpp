#include "mdscache/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

namespace mdscache {

namespace {

// How much walk history a track retains, in seconds. Contact detection
// bisects within one probe step (a fraction of a second), so this is
// generous while still keeping the leg deque tiny.
constexpr double kHistoryWindow = 16.0;

double poisson_log_pmf(double mean, long long j) {
  return -mean + static_cast<double>(j) * std::log(mean) - std::lgamma(static_cast<double>(j) + 1.0);
}

// Model probability for one histogram bin; the last bin lumps everything at
// or above its index.
double model_bin_prob(const ContactModel& contact, std::size_t j, std::size_t last) {
  double q;
  if (j < last) {
    if (j < contact.q.size()) {
      q = contact.q[j];
    } else {
      q = std::exp(poisson_log_pmf(contact.mean_caching_in_range, static_cast<long long>(j)));
    }
  } else {
    q = 1.0 - contact.head(static_cast<long long>(last) + 1).prob;  // Pr(J >= last)
  }
  return std::max(q, 1e-300);
}

double kl_from_histogram(const std::vector<long long>& hist, long long total,
                         const ContactModel& contact) {
  if (total <= 0 || hist.empty()) return 0.0;
  const std::size_t last = hist.size() - 1;
  double kl = 0.0;
  for (std::size_t j = 0; j < hist.size(); ++j) {
    if (hist[j] == 0) continue;
    const double p = static_cast<double>(hist[j]) / static_cast<double>(total);
    kl += p * std::log(p / model_bin_prob(contact, j, last));
  }
  return std::max(kl, 0.0);  // shield against rounding when hist matches exactly
}

// Rates and intervals from raw accumulators. Request contributions arrive as
// a marked Poisson stream, so var(sum/T) is estimated by sumsq/T^2.
void finalize_report(SimReport& rep, const ContactModel& contact) {
  const double t = rep.duration;
  if (t <= 0.0) throw std::invalid_argument("simulation duration must be positive");
  rep.downlink_rate = rep.downlink_sum / t;
  rep.d2d_rate = rep.d2d_sum / t;
  rep.self_rate = rep.self_sum / t;
  rep.weighted_rate = rep.theta * rep.downlink_rate + (1.0 - rep.theta) * rep.d2d_rate;
  rep.downlink_halfwidth = 1.96 * std::sqrt(rep.downlink_sumsq) / t;
  rep.d2d_halfwidth = 1.96 * std::sqrt(rep.d2d_sumsq) / t;
  rep.kl_divergence = kl_from_histogram(rep.in_range_histogram, rep.histogram_requests, contact);
}

}  // namespace

DeviceTrack::DeviceTrack(Rng rng, const SphereConfig& sphere, double s_min, double s_max)
    : rng_(rng), sphere_(sphere), s_min_(s_min), s_max_(s_max) {
  const SpherePoint start = sample_uniform_point(rng_);
  legs_.push_back({start, start, 1.0, 0.0, 0.0});
  append_leg(0.0);
  legs_.pop_front();  // drop the zero-length bootstrap leg
}

void DeviceTrack::append_leg(double depart) {
  DeviceLeg leg;
  leg.origin = legs_.back().target;
  leg.depart_time = depart;
  // Reject degenerate waypoints: a zero-length leg stalls time, an antipodal
  // one has no unique path. Both have probability zero up to rounding.
  for (;;) {
    leg.target = sample_uniform_point(rng_);
    const double ang = angle_between(leg.origin, leg.target);
    if (ang > 1e-9 && ang < M_PI - 1e-6) break;
  }
  leg.speed = rng_.uniform(s_min_, s_max_);
  leg.arrive_time = depart + great_circle_distance(leg.origin, leg.target, sphere_) / leg.speed;
  legs_.push_back(leg);
}

SpherePoint DeviceTrack::eval(const DeviceLeg& leg, double t) const {
  const double span = leg.arrive_time - leg.depart_time;
  double f = span > 0.0 ? (t - leg.depart_time) / span : 1.0;
  f = std::clamp(f, 0.0, 1.0);
  return position_on_leg(leg.origin, leg.target, f);
}

SpherePoint DeviceTrack::position_at(double t) {
  if (t < legs_.front().depart_time) {
    throw std::out_of_range("position_at: time precedes retained history");
  }
  while (legs_.back().arrive_time < t) {
    append_leg(legs_.back().arrive_time);
  }
  while (legs_.size() > 1 && legs_[1].depart_time <= t - kHistoryWindow) {
    legs_.pop_front();
  }
  for (auto it = legs_.rbegin(); it != legs_.rend(); ++it) {
    if (it->depart_time <= t) return eval(*it, t);
  }
  return eval(legs_.front(), t);  // unreachable given the guard above
}

SpherePoint DeviceTrack::position_lookup(double t) const {
  if (t < legs_.front().depart_time || t > legs_.back().arrive_time + 1e-9) {
    throw std::out_of_range("position_lookup: time outside retained history");
  }
  for (auto it = legs_.rbegin(); it != legs_.rend(); ++it) {
    if (it->depart_time <= t) return eval(*it, t);
  }
  return eval(legs_.front(), t);
}

long long range_query(const std::vector<SpherePoint>& positions, int requester, double r,
                      const SphereConfig& sphere, const std::vector<int>& cachers) {
  const double threshold = std::min(r / sphere.rho, M_PI);
  const double cos_threshold = std::cos(threshold);
  const SpherePoint& p = positions[static_cast<std::size_t>(requester)];
  long long count = 0;
  for (int c : cachers) {
    if (c == requester) continue;
    if (dot(p, positions[static_cast<std::size_t>(c)]) >= cos_threshold) ++count;
  }
  return count;
}

SimReport simulate(const SystemConfig& cfg, const PlacementMatrix& placement,
                   const Allocation& alloc, double duration, double warmup, Rng& rng) {
  cfg.validate();
  if (duration <= 0.0 || warmup < 0.0) {
    throw std::invalid_argument("simulate: need duration > 0 and warmup >= 0");
  }
  if (placement.num_files != cfg.library_size) {
    throw std::invalid_argument("simulate: placement library size does not match config");
  }
  placement.validate(alloc);

  const int m = cfg.num_devices;
  const int n_files = cfg.library_size;
  const Popularity pop = zipf_popularity(n_files, cfg.sigma);
  std::vector<double> cdf(pop.weights().size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc += pop[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  const SphereConfig sphere{cfg.rho};
  std::vector<DeviceTrack> tracks;
  tracks.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    tracks.emplace_back(rng.fork(), sphere, cfg.s_min, cfg.s_max);
  }
  std::vector<SpherePoint> positions(static_cast<std::size_t>(m));

  const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);
  SimReport rep;
  rep.duration = duration;
  rep.theta = cfg.theta;
  rep.in_range_histogram.assign(contact.q.size() + 32, 0);
  const std::size_t last_bin = rep.in_range_histogram.size() - 1;

  const double total_rate = cfg.system_request_rate();
  const double t_end = warmup + duration;
  double t = 0.0;
  for (;;) {
    t += rng.exponential(total_rate);
    if (t >= t_end) break;
    const int dev = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    const double u = rng.uniform01();
    const int file = static_cast<int>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (t < warmup) continue;  // keep the draw sequence, skip the bookkeeping

    ++rep.requests;
    const double a = file < n_files ? alloc.alpha[static_cast<std::size_t>(file)] : 0.0;
    double bs = 1.0, d2d = 0.0, self = 0.0;
    if (a > 0.0) {
      const auto& cachers = placement.cachers[static_cast<std::size_t>(file)];
      positions[static_cast<std::size_t>(dev)] = tracks[static_cast<std::size_t>(dev)].position_at(t);
      for (int c : cachers) {
        positions[static_cast<std::size_t>(c)] = tracks[static_cast<std::size_t>(c)].position_at(t);
      }
      const long long j = range_query(positions, dev, cfg.r, sphere, cachers);
      ++rep.in_range_histogram[std::min(static_cast<std::size_t>(j), last_bin)];
      ++rep.histogram_requests;

      const DownloadSplit split =
          alloc.grid_valid ? download_fractions(a, alloc.k[static_cast<std::size_t>(file)], j)
                           : download_fractions(a, j);
      if (placement.caches(file, dev)) {
        bs = split.bs_cached;
        d2d = split.d2d_cached;
        self = a;
      } else {
        bs = split.bs_uncached;
        d2d = split.d2d_uncached;
      }
    }
    rep.downlink_sum += bs;
    rep.downlink_sumsq += bs * bs;
    rep.d2d_sum += d2d;
    rep.d2d_sumsq += d2d * d2d;
    rep.self_sum += self;
  }

  finalize_report(rep, contact);
  return rep;
}

SimReport merge_reports(const std::vector<SimReport>& reports, const ContactModel& contact) {
  if (reports.empty()) throw std::invalid_argument("merge_reports: nothing to merge");
  SimReport out;
  out.theta = reports.front().theta;
  for (const SimReport& r : reports) {
    out.duration += r.duration;
    out.requests += r.requests;
    out.downlink_sum += r.downlink_sum;
    out.downlink_sumsq += r.downlink_sumsq;
    out.d2d_sum += r.d2d_sum;
    out.d2d_sumsq += r.d2d_sumsq;
    out.self_sum += r.self_sum;
    out.histogram_requests += r.histogram_requests;
    if (r.in_range_histogram.size() > out.in_range_histogram.size()) {
      out.in_range_histogram.resize(r.in_range_histogram.size(), 0);
    }
    for (std::size_t j = 0; j < r.in_range_histogram.size(); ++j) {
      out.in_range_histogram[j] += r.in_range_histogram[j];
    }
  }
  finalize_report(out, contact);
  return out;
}

std::string SimReport::to_text() const {
  std::ostringstream os;
  os.precision(12);
  os << "duration " << duration << '\n'
     << "requests " << requests << '\n'
     << "downlink_rate " << downlink_rate << '\n'
     << "downlink_halfwidth " << downlink_halfwidth << '\n'
     << "d2d_rate " << d2d_rate << '\n'
     << "d2d_halfwidth " << d2d_halfwidth << '\n'
     << "self_rate " << self_rate << '\n'
     << "theta " << theta << '\n'
     << "weighted_rate " << weighted_rate << '\n'
     << "kl_divergence " << kl_divergence << '\n'
     << "histogram_requests " << histogram_requests << '\n';
  for (std::size_t j = 0; j < in_range_histogram.size(); ++j) {
    if (in_range_histogram[j] > 0) {
      os << "in_range " << j << ' ' << in_range_histogram[j] << '\n';
    }
  }
  return os.str();
}

ContactStats empirical_contact_stats(const MobilityParams& params, double duration,
                                     double warmup, Rng& rng, int max_pairs,
                                     double time_step) {
  params.validate();
  if (duration <= warmup) {
    throw std::invalid_argument("empirical_contact_stats: duration must exceed warmup");
  }
  if (max_pairs < 1) throw std::invalid_argument("empirical_contact_stats: need pairs >= 1");
  const double dt = time_step > 0.0 ? time_step : params.r / (20.0 * params.s_max);
  const SphereConfig sphere{params.rho};
  const double threshold = std::min(params.r / params.rho, M_PI);
  const double cos_threshold = std::cos(threshold);

  double contact_sum = 0.0, contact_sumsq = 0.0;
  double inter_sum = 0.0, inter_sumsq = 0.0;
  long long contacts = 0, inters = 0, starts = 0;

  for (int pair = 0; pair < max_pairs; ++pair) {
    DeviceTrack a(rng.fork(), sphere, params.s_min, params.s_max);
    DeviceTrack b(rng.fork(), sphere, params.s_min, params.s_max);
    bool in_range = dot(a.position_at(0.0), b.position_at(0.0)) >= cos_threshold;
    double current_start = -1.0;  // start of the ongoing contact; < 0 = censored
    double previous_start = -1.0;
    double t = 0.0;
    while (t < duration) {
      const double t_next = std::min(t + dt, duration);
      const bool in_next =
          dot(a.position_at(t_next), b.position_at(t_next)) >= cos_threshold;
      if (in_next != in_range) {
        // Bisect the crossing inside (t, t_next]; both tracks retain this window.
        double lo = t, hi = t_next;
        for (int iter = 0; iter < 30; ++iter) {
          const double mid = 0.5 * (lo + hi);
          const bool in_mid =
              dot(a.position_lookup(mid), b.position_lookup(mid)) >= cos_threshold;
          (in_mid == in_range ? lo : hi) = mid;
        }
        const double crossing = 0.5 * (lo + hi);
        if (in_next) {  // contact begins
          if (crossing >= warmup) {
            ++starts;
            if (previous_start >= warmup) {
              const double gap = crossing - previous_start;
              inter_sum += gap;
              inter_sumsq += gap * gap;
              ++inters;
            }
            previous_start = crossing;
            current_start = crossing;
          } else {
            current_start = -1.0;
          }
        } else {  // contact ends
          if (current_start >= warmup) {
            const double len = crossing - current_start;
            contact_sum += len;
            contact_sumsq += len * len;
            ++contacts;
          }
          current_start = -1.0;
        }
        in_range = in_next;
      }
      t = t_next;
    }
    // Contacts still open at the end are censored and simply not recorded.
  }

  ContactStats st;
  st.pairs = max_pairs;
  st.contact_samples = contacts;
  st.intercontact_samples = inters;
  if (contacts > 0) {
    st.mean_contact_time = contact_sum / contacts;
    const double var =
        std::max(0.0, contact_sumsq / contacts - st.mean_contact_time * st.mean_contact_time);
    st.contact_halfwidth = 1.96 * std::sqrt(var / contacts);
  }
  if (inters > 0) {
    st.mean_intercontact_time = inter_sum / inters;
    const double var = std::max(
        0.0, inter_sumsq / inters - st.mean_intercontact_time * st.mean_intercontact_time);
    st.intercontact_halfwidth = 1.96 * std::sqrt(var / inters);
  }
  st.interarrival_rate =
      static_cast<double>(starts) / (static_cast<double>(max_pairs) * (duration - warmup));
  return st;
}

}  // namespace mdscache
