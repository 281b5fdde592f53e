#pragma once
#include <cstdint>

namespace rsd {

// SplitMix64-style finalizer over (seed, counter). Stateless, so the value at
// a counter does not depend on evaluation order; two-sided sequences need no
// stored tails.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t ctr) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (ctr + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// 53-bit mantissa draw in [0,1)
inline double unit_double(std::uint64_t bits) { return (bits >> 11) * 0x1.0p-53; }

// Injective signed index -> counter encoding.
inline std::uint64_t zigzag(std::int64_t n) {
  return (static_cast<std::uint64_t>(n) << 1) ^ static_cast<std::uint64_t>(n >> 63);
}

// Deterministic draw stream for Monte Carlo work that is not word symbols.
// Distinct (seed, stream) pairs give independent-looking streams.
class MixStream {
 public:
  explicit MixStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(mix64(seed, 0x632BE59BD9B4E019ULL ^ stream)), ctr_(0) {}
  std::uint64_t next_u64() { return mix64(seed_, ctr_++); }
  double next_double() { return unit_double(next_u64()); }
  std::uint64_t next_below(std::uint64_t m) { return next_u64() % m; }
  double next_in(double a, double b) { return a + (b - a) * next_double(); }
 private:
  std::uint64_t seed_;
  std::uint64_t ctr_;
};

}  // namespace rsd
