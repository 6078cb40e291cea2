#pragma once

#include <cmath>
#include <cstdint>

#include "cvxnn/types.hpp"

namespace cvxnn {

// Counter-based generator: output k of stream `seed` is the SplitMix64
// finalizer applied to seed + k * golden-gamma. State is just (seed, counter),
// so any draw can be reproduced independently of history and results are
// identical across platforms.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

  // Standard normal via Box-Muller; the sine mate is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  Vector gaussian_vector(Index d) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = gaussian();
    return v;
  }

  // Independent stream derived from this seed; used so parallel or reordered
  // consumers do not share a counter sequence.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    CounterRng g(seed ^ 0xD1B54A32D192ED03ULL, stream * 0x2545F4914F6CDD1DULL);
    return g.next_u64();
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cvxnn
