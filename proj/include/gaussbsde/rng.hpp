#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gaussbsde {

// SplitMix64 finalizer; used as the keyed hash of the counter-based streams.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream key from (seed, domain, index).
/// Streams depend only on these three integers, so per-path sampling is
/// reproducible regardless of how work is split across threads.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t domain,
                                   std::uint64_t index) noexcept {
  return mix64(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ mix64(domain * 0xd1b54a32d192ed03ULL + 1) ^
               mix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the n-th output is a pure function of (key, n).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept {
    return mix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Domains keep streams used for different purposes disjoint.
namespace rng_domain {
inline constexpr std::uint64_t kDriverPaths = 1;
inline constexpr std::uint64_t kSolverParticles = 2;
inline constexpr std::uint64_t kRepresentation = 3;
inline constexpr std::uint64_t kProbe = 4;
inline constexpr std::uint64_t kSubsample = 5;
inline constexpr std::uint64_t kResidualPaths = 6;
}  // namespace rng_domain

}  // namespace gaussbsde
