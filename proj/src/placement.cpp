#include "mdscache/placement.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace mdscache {
namespace {

using Rational = boost::multiprecision::cpp_rational;

// Per-device load with a double shadow for the common case. The exact value
// decides only when the shadow lands within the ambiguity band around the
// capacity, which keeps the rational arithmetic off the hot path.
struct DeviceLoad {
  double approx = 0.0;
  Rational exact = 0;
};

constexpr double kShadowBand = 1e-7;

// Sample `count` distinct entries from pool[cursor:] by partial Fisher-Yates;
// the sample ends up at pool[cursor : cursor+count].
void draw_batch(std::vector<int>& pool, std::size_t cursor, std::size_t count, Rng& rng) {
  const std::size_t avail = pool.size() - cursor;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t pick = cursor + t + static_cast<std::size_t>(rng.below(avail - t));
    std::swap(pool[cursor + t], pool[pick]);
  }
}

}  // namespace

bool PlacementMatrix::caches(int file, int device) const {
  const auto& row = cachers[static_cast<std::size_t>(file)];
  return std::binary_search(row.begin(), row.end(), device);
}

std::vector<double> PlacementMatrix::device_loads(const Allocation& alloc) const {
  std::vector<double> load(static_cast<std::size_t>(num_devices), 0.0);
  for (int i = 0; i < num_files; ++i) {
    const double a = alloc.alpha[static_cast<std::size_t>(i)];
    for (int d : cachers[static_cast<std::size_t>(i)]) load[static_cast<std::size_t>(d)] += a;
  }
  return load;
}

void PlacementMatrix::validate(const Allocation& alloc) const {
  if (alloc.size() != static_cast<std::size_t>(num_files)) {
    throw std::invalid_argument("placement row count does not match allocation");
  }
  if (!alloc.grid_valid) {
    throw std::invalid_argument("placement requires a grid-valid allocation");
  }
  for (int i = 0; i < num_files; ++i) {
    const auto& row = cachers[static_cast<std::size_t>(i)];
    const bool cached = alloc.alpha[static_cast<std::size_t>(i)] > 0.0;
    if (row.size() != (cached ? static_cast<std::size_t>(code_length) : 0)) {
      throw std::invalid_argument("placement row size must be n for cached files, 0 otherwise");
    }
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (row[t] < 0 || row[t] >= num_devices) {
        throw std::invalid_argument("placement device id out of range");
      }
      if (t > 0 && row[t] <= row[t - 1]) {
        throw std::invalid_argument("placement rows must be sorted and duplicate-free");
      }
    }
  }
}

PlacementMatrix uniform_random_placement(const Allocation& alloc, int num_devices,
                                         int code_length, Rng& rng) {
  if (!alloc.grid_valid) {
    throw std::invalid_argument("uniform placement requires a grid-valid allocation");
  }
  if (code_length < 1 || code_length > num_devices) {
    throw std::invalid_argument("code length n must satisfy 1 <= n <= M");
  }
  PlacementMatrix placement;
  placement.num_files = static_cast<int>(alloc.size());
  placement.num_devices = num_devices;
  placement.code_length = code_length;
  placement.cachers.resize(alloc.size());

  std::vector<int> pool(static_cast<std::size_t>(num_devices));
  for (int d = 0; d < num_devices; ++d) pool[static_cast<std::size_t>(d)] = d;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    if (alloc.alpha[i] <= 0.0) continue;
    draw_batch(pool, 0, static_cast<std::size_t>(code_length), rng);
    auto& row = placement.cachers[i];
    row.assign(pool.begin(), pool.begin() + code_length);
    std::sort(row.begin(), row.end());
  }
  return placement;
}

StrictPlacement greedy_strict_placement(const Allocation& alloc, const SystemConfig& cfg,
                                        double delta, Rng& rng) {
  cfg.validate();
  if (!alloc.grid_valid) {
    throw std::invalid_argument("strict placement requires a grid-valid allocation");
  }
  if (alloc.size() != static_cast<std::size_t>(cfg.library_size)) {
    throw std::invalid_argument("allocation size does not match library size");
  }
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");

  const int m_devices = cfg.num_devices;
  const int n = cfg.code_length;
  const double cap_approx = (1.0 + delta) * cfg.beta_d;
  const Rational cap_exact = (Rational(1) + Rational(delta)) * Rational(cfg.beta_d);

  std::vector<DeviceLoad> load(static_cast<std::size_t>(m_devices));
  const auto fits = [&](const DeviceLoad& dev, int k) {
    const double cand = dev.approx + 1.0 / static_cast<double>(k);
    if (cand < cap_approx - kShadowBand) return true;
    if (cand > cap_approx + kShadowBand) return false;
    return dev.exact + Rational(1, k) <= cap_exact;
  };

  StrictPlacement out;
  out.placement.num_files = static_cast<int>(alloc.size());
  out.placement.num_devices = m_devices;
  out.placement.code_length = n;
  out.placement.cachers.resize(alloc.size());
  std::vector<int> k_final(alloc.size(), 0);

  std::vector<int> pool(static_cast<std::size_t>(m_devices));
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    int k = alloc.k[i];
    auto& row = out.placement.cachers[i];
    while (k >= 1) {
      for (int d = 0; d < m_devices; ++d) pool[static_cast<std::size_t>(d)] = d;
      std::size_t cursor = 0;
      row.clear();
      int needed = n;
      while (needed > 0) {
        draw_batch(pool, cursor, static_cast<std::size_t>(needed), rng);
        const std::size_t batch_end = cursor + static_cast<std::size_t>(needed);
        for (std::size_t t = cursor; t < batch_end; ++t) {
          const int dev = pool[t];
          auto& dl = load[static_cast<std::size_t>(dev)];
          if (!fits(dl, k)) continue;
          row.push_back(dev);
          dl.approx += 1.0 / static_cast<double>(k);
          dl.exact += Rational(1, k);
        }
        cursor = batch_end;
        needed = n - static_cast<int>(row.size());
        if (static_cast<std::size_t>(needed) > pool.size() - cursor) break;
      }
      if (static_cast<int>(row.size()) == n) break;
      // Not enough room at this fraction: undo, shrink one grid step, retry.
      for (int dev : row) {
        auto& dl = load[static_cast<std::size_t>(dev)];
        dl.approx -= 1.0 / static_cast<double>(k);
        dl.exact -= Rational(1, k);
      }
      row.clear();
      ++out.retries;
      ++k;
      if (k > n) k = 0;  // file no longer fits at any grid fraction
    }
    if (k >= 1) {
      std::sort(row.begin(), row.end());
      k_final[i] = k;
    } else {
      row.clear();
    }
  }

  out.alloc = Allocation::from_k(std::move(k_final), n);
  out.placement.validate(out.alloc);
  return out;
}

double strict_load_margin(const PlacementMatrix& placement, const Allocation& alloc,
                          double beta_d, double delta) {
  placement.validate(alloc);
  const Rational cap = (Rational(1) + Rational(delta)) * Rational(beta_d);
  std::vector<Rational> load(static_cast<std::size_t>(placement.num_devices));
  for (int i = 0; i < placement.num_files; ++i) {
    const int k = alloc.k[static_cast<std::size_t>(i)];
    if (k == 0) continue;
    for (int d : placement.cachers[static_cast<std::size_t>(i)]) {
      load[static_cast<std::size_t>(d)] += Rational(1, k);
    }
  }
  Rational worst = load.empty() ? Rational(Rational(0) - cap) : Rational(load[0] - cap);
  for (const Rational& l : load) worst = std::max(worst, Rational(l - cap));
  return static_cast<double>(worst);
}

void write_placement(std::ostream& os, const PlacementMatrix& placement) {
  os << "# placement " << placement.num_files << ' ' << placement.num_devices << ' '
     << placement.code_length << '\n';
  for (int i = 0; i < placement.num_files; ++i) {
    for (int d : placement.cachers[static_cast<std::size_t>(i)]) {
      os << i << ' ' << d << '\n';
    }
  }
}

PlacementMatrix read_placement(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("placement stream is empty");
  std::istringstream header(line);
  std::string hash, tag;
  PlacementMatrix placement;
  header >> hash >> tag >> placement.num_files >> placement.num_devices >> placement.code_length;
  if (hash != "#" || tag != "placement" || header.fail() || placement.num_files < 0 ||
      placement.num_devices < 1 || placement.code_length < 1) {
    throw std::runtime_error("malformed placement header");
  }
  placement.cachers.resize(static_cast<std::size_t>(placement.num_files));
  long long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    int file = -1, device = -1;
    row >> file >> device;
    if (row.fail() || file < 0 || file >= placement.num_files || device < 0 ||
        device >= placement.num_devices) {
      throw std::runtime_error("malformed placement entry at line " + std::to_string(line_no));
    }
    placement.cachers[static_cast<std::size_t>(file)].push_back(device);
  }
  for (auto& row : placement.cachers) std::sort(row.begin(), row.end());
  return placement;
}

}  // namespace mdscache
