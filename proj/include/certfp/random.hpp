#pragma once

#include <cstdint>

namespace certfp {

// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
// needed so that a single seed reproduces every sample, trace, and report
// byte-for-byte across platforms. std::uniform_real_distribution is
// implementation-defined, hence avoided.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Random sign, +1.0 or -1.0.
  double sign() { return (next() & 1ull) ? 1.0 : -1.0; }

 private:
  std::uint64_t state_;
};

}  // namespace certfp
