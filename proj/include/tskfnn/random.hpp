#pragma once

#include <cstdint>
#include <random>

namespace tskfnn {

/// Independent streams drawn from one user seed.
enum class RngStream : std::uint64_t { kInit = 1, kSplit = 2 };

/// mt19937_64 with hand-rolled bounded/real draws.  The standard
/// distributions are implementation-defined, these are not, so results
/// match across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, RngStream stream)
      : engine_(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(stream)) {}

  /// Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tskfnn
