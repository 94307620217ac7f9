#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mdscache {

// Deterministic random stream. Wraps std::mt19937_64 but does all the
// real-valued mapping by hand so that results are bit-identical across
// standard library implementations (std::uniform_real_distribution and
// friends are not pinned down by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Exponential with the given rate; uses log1p so tiny uniforms are safe.
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Uniform integer in [0, bound), rejection sampled so there is no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Derives an independent child stream. Consumes one draw from this stream,
  // so fork order matters for reproducibility.
  Rng fork() { return Rng(split_mix(engine_())); }

 private:
  static std::uint64_t split_mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace mdscache
