#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace spincool {

/// SplitMix64 (Steele, Lea & Flood 2014). The whole generator state is one
/// 64-bit counter, so a stream is portable across platforms and can be
/// checkpointed by storing `state()`.
///
/// Derived doubles are also specified here rather than through <random>
/// distributions, whose algorithms are implementation-defined:
///   uniform()  = (next() >> 11) * 2^-53                 in [0, 1)
///   normal()   = Box-Muller on (1 - uniform(), uniform()), cosine branch only
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  /// Independent stream `stream_id` for a given seed.
  static SplitMix64 derive(std::uint64_t seed, std::uint64_t stream_id) {
    return SplitMix64(mix(seed ^ mix(stream_id * kGamma + kGamma)));
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    state_ += kGamma;
    return mix(state_);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_;
};

}  // namespace spincool
