#pragma once

#include <cstdint>
#include <limits>

namespace bracketlab {

/// Counter-based SplitMix64 stream.
///
/// Output k (k = 0, 1, ...) is mix(seed + (k + 1) * 0x9E3779B97F4A7C15) with
/// the standard SplitMix64 finalizer. The sequence depends only on the seed
/// and the draw index, so results are identical on every platform. All
/// randomness in the library flows through this type; std distributions are
/// avoided because their algorithms are implementation-defined.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), unbiased by rejection. bound > 0.
  std::uint64_t bounded(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace bracketlab
