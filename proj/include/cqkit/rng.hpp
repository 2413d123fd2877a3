#pragma once

#include <cstdint>
#include <string_view>

namespace cqkit {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// SplitMix64 stream. Identical across platforms and standard libraries,
/// unlike the std:: distributions.
class SplitMix {
public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}

  /// A stream keyed by (seed, name): streams for different names are
  /// independent, so adding or removing instances never shifts the draws
  /// of the others.
  static SplitMix keyed(std::uint64_t seed, std::string_view name) {
    return SplitMix(splitmix64(seed ^ splitmix64(fnv1a64(name))));
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Unbiased draw from [0, n); n must be positive.
  std::uint64_t uniform(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

private:
  std::uint64_t state_;
};

} // namespace cqkit
