#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace swgf {

/// Purposes for keyed random streams. Two streams that differ in any key
/// component are statistically independent.
enum class StreamPurpose : std::uint64_t {
  kInit = 1,
  kPerturbation = 2,
  kTrajectoryNoise = 3,
  kObservationNoise = 4,
  kSubsample = 5,
  kTest = 99,
};

/// Counter-based generator keyed by (seed, purpose, a, b).
///
/// Every draw is a SplitMix64 finalizer applied to key + counter, so a stream
/// can be recreated anywhere from its key alone. This makes per-particle
/// randomness independent of evaluation order and worker count, and it keeps
/// results identical across standard library implementations (the
/// std:: distributions are not portable).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0, std::uint64_t b = 0)
      : key_(mix(mix(mix(seed ^ 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(purpose)) ^ mix(a + 0x632BE59BD9B4E019ULL)) ^
             mix(b + 0x85157AF5D4F1C2B3ULL)) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is discarded so each
  /// call consumes exactly two counter values.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace swgf
