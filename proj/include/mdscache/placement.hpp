#pragma once

#include <iosfwd>
#include <vector>

#include "mdscache/cache_model.hpp"
#include "mdscache/rng.hpp"

namespace mdscache {

// Which devices hold a coded packet of which file. Rows are files; a cached
// file occupies exactly n devices, an uncached file none.
struct PlacementMatrix {
  int num_files = 0;
  int num_devices = 0;
  int code_length = 0;
  std::vector<std::vector<int>> cachers;  // per file, sorted device ids

  bool caches(int file, int device) const;

  // Exact per-device load sum alpha_i over files placed on the device,
  // returned as doubles for reporting (the exact check lives in
  // verify_strict_loads).
  std::vector<double> device_loads(const Allocation& alloc) const;

  void validate(const Allocation& alloc) const;  // rows match alloc, ids in range
};

// Place every cached file on n devices chosen uniformly at random, ignoring
// capacity. The baseline the analytical model assumes.
PlacementMatrix uniform_random_placement(const Allocation& alloc, int num_devices,
                                         int code_length, Rng& rng);

// Result of capacity-respecting placement: the allocation actually placed
// (entries may have shrunk or dropped to zero) plus the placement itself.
struct StrictPlacement {
  Allocation alloc;
  PlacementMatrix placement;
  long long retries = 0;  // how many times a file had to shrink and restart
};

// Greedy strict placement. Files are processed in order; each is offered to
// random batches of still-unvisited devices and placed wherever it fits
// within the per-device budget (1 + delta) * beta_d. If fewer than n copies
// fit, the file's fraction shrinks one grid step (k -> k+1) and the file
// restarts against all devices; a fraction below 1/n is dropped. Device
// loads are tracked in exact rational arithmetic, so "fits" is never a
// floating-point judgement call.
StrictPlacement greedy_strict_placement(const Allocation& alloc, const SystemConfig& cfg,
                                        double delta, Rng& rng);

// Exact check that no device load exceeds (1 + delta) * beta_d. Returns the
// worst offending margin in files (<= 0 when all loads are within budget).
double strict_load_margin(const PlacementMatrix& placement, const Allocation& alloc,
                          double beta_d, double delta);

// Sparse text round trip:
//   # placement <files> <devices> <code_length>
//   <file_id> <device_id>        (one pair per line)
void write_placement(std::ostream& os, const PlacementMatrix& placement);
PlacementMatrix read_placement(std::istream& is);

}  // namespace mdscache
