#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "mdscache/cache_model.hpp"
#include "mdscache/placement.hpp"
#include "mdscache/rng.hpp"
#include "mdscache/sphere.hpp"

namespace mdscache {

// One straight (great-circle) leg of a random-waypoint walk.
struct DeviceLeg {
  SpherePoint origin, target;
  double speed = 0.0;
  double depart_time = 0.0;
  double arrive_time = 0.0;
};

// Random-waypoint walker on the sphere. Positions are evaluated lazily:
// nothing advances until someone asks where the device is. A short history
// of completed legs is kept so recent past times can still be queried
// (bisection during contact detection needs that).
class DeviceTrack {
 public:
  DeviceTrack(Rng rng, const SphereConfig& sphere, double s_min, double s_max);

  // Position at time t. Calls must use non-decreasing t (up to the retained
  // history window, see position_lookup).
  SpherePoint position_at(double t);

  // Position at a past time within the retained history (roughly the last
  // couple of query steps). Does not advance the walk.
  SpherePoint position_lookup(double t) const;

  const DeviceLeg& current_leg() const { return legs_.back(); }

 private:
  void append_leg(double depart);
  SpherePoint eval(const DeviceLeg& leg, double t) const;

  Rng rng_;
  SphereConfig sphere_;
  double s_min_, s_max_;
  std::deque<DeviceLeg> legs_;  // oldest first; back() is current
};

// Count of caching devices within great-circle range r of the requester
// (requester itself excluded if it appears among the cachers).
long long range_query(const std::vector<SpherePoint>& positions, int requester, double r,
                      const SphereConfig& sphere, const std::vector<int>& cachers);

// Outcome of a simulation run. Rates are in file-equivalents per second,
// matching the analytical model's units.
struct SimReport {
  double duration = 0.0;  // measured interval, warmup excluded
  long long requests = 0;
  double downlink_rate = 0.0;  // \hat f
  double d2d_rate = 0.0;       // \hat g
  double self_rate = 0.0;      // served from the requester's own cache
  double weighted_rate = 0.0;  // theta \hat f + (1-theta) \hat g
  double theta = 1.0;               // weight used for weighted_rate
  double downlink_halfwidth = 0.0;  // 95% CI half-widths on the rates
  double d2d_halfwidth = 0.0;
  // Histogram of caching-devices-in-range at request instants, restricted to
  // requests for cached files (uncached files have no contact count to
  // compare against the model).
  std::vector<long long> in_range_histogram;
  long long histogram_requests = 0;
  double kl_divergence = 0.0;  // empirical histogram vs model Poisson

  // Internal accumulators carried so reports can be merged exactly.
  double downlink_sum = 0.0, downlink_sumsq = 0.0;
  double d2d_sum = 0.0, d2d_sumsq = 0.0;
  double self_sum = 0.0;

  std::string to_text() const;  // line-oriented "key value" record
};

// Event-driven simulation: requests arrive as a Poisson stream of rate
// M * omega at a uniformly random device for a popularity-distributed file;
// each request advances only the devices whose positions matter (requester
// plus the cachers of the requested file).
SimReport simulate(const SystemConfig& cfg, const PlacementMatrix& placement,
                   const Allocation& alloc, double duration, double warmup, Rng& rng);

// Combine independent replications into one report (weighted by duration;
// the KL divergence is recomputed from the merged histogram).
SimReport merge_reports(const std::vector<SimReport>& reports, const ContactModel& contact);

// Direct measurement of the pairwise contact process: time-stepped distance
// tracking with bisection-refined in/out crossing times.
struct ContactStats {
  double mean_contact_time = 0.0;
  double contact_halfwidth = 0.0;  // 95% CI
  long long contact_samples = 0;
  double mean_intercontact_time = 0.0;
  double intercontact_halfwidth = 0.0;
  long long intercontact_samples = 0;
  double interarrival_rate = 0.0;  // contact starts per pair-second observed
  long long pairs = 0;
};

ContactStats empirical_contact_stats(const MobilityParams& params, double duration,
                                     double warmup, Rng& rng, int max_pairs = 400,
                                     double time_step = 0.0 /* 0 = auto */);

}  // namespace mdscache
