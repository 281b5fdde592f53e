#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "rsd/models.hpp"
#include "rsd/rng.hpp"

namespace rsd {

// Finitely supported measure on named automorphisms.
struct FiniteMeasure {
  std::vector<std::string> atoms;  // distinct generator names
  std::vector<double> weights;     // positive, sum 1 within 1e-12

  void validate() const;  // throws std::invalid_argument on violation
  static FiniteMeasure uniform(std::vector<std::string> names);
};

// Two-sided word omega in supp(mu)^Z, realized lazily from a counter-based
// generator: symbol(n) is O(1) for any index and never stores tails.
// shift acts by index offset, so shifted(m).symbol(n) == symbol(n+m) exactly.
class WalkWord {
 public:
  WalkWord(const FiniteMeasure& mu, std::uint64_t seed,
           std::int64_t window = (std::int64_t{1} << 40));

  int symbol(std::int64_t n) const;        // index into the measure's atoms
  WalkWord shifted(std::int64_t m) const;  // sigma^m omega

  std::uint64_t seed() const { return seed_; }
  std::int64_t offset() const { return offset_; }
  std::int64_t window() const { return window_; }
  int n_atoms() const { return static_cast<int>(cum_.size()); }

 private:
  std::uint64_t seed_;
  std::int64_t offset_;
  std::int64_t window_;
  std::vector<double> cum_;  // cumulative weights
};

// Truncated product-space metric: sum over |n| <= n_trunc of 2^{-|n|} d(w_n, w'_n)
// with the discrete metric d on symbols. Bounded by 3; zero iff the truncated
// windows agree.
double omega_distance(const WalkWord& a, const WalkWord& b, int n_trunc = 64);

// f_omega^n: identity for n = 0; f_{n-1} o ... o f_0 for n >= 1;
// (f_{-|n|})^{-1} o ... o (f_{-1})^{-1} for n <= -1.
Point compose(const SurfaceModel& model, const WalkWord& omega, std::int64_t n,
              const Point& x);

// One application of the skew product step count n: (x, omega) -> (f_omega^n x, sigma^n omega).
struct SkewState {
  Point x;
  WalkWord omega;
};
SkewState skew_step(const SurfaceModel& model, const SkewState& state, std::int64_t n);

}  // namespace rsd
