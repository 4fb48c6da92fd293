#pragma once

#include <cstdint>

#include "elsa/error.hpp"

namespace elsa {

/// Seeded generator used for every random draw in the project.
///
/// Algorithm: SplitMix64 (64-bit state, increment 0x9E3779B97F4A7C15,
/// output mixer with shifts 30/27/31 and multipliers 0xBF58476D1CE4E5B9,
/// 0x94D049BB133111EB). The derived draws are defined here too, instead of
/// using <random> distributions, whose outputs differ between standard
/// library implementations:
///   - uniform01():  (next() >> 11) * 2^-53
///   - uniform_int(lo, hi): rejection sampling on next() % span with the
///     threshold (2^64 - span) % span, so every value is equally likely.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    require(lo <= hi, "uniform_int: empty range");
    const std::uint64_t span =
        static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());  // full 64-bit range
    const std::uint64_t threshold = (0 - span) % span;
    std::uint64_t r = next();
    while (r < threshold) r = next();
    return lo + static_cast<std::int64_t>(r % span);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Independent stream for item `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mixer(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return mixer.next();
}

}  // namespace elsa
