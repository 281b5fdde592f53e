#include "rsd/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rsd/models.hpp"

namespace rsd {

void FiniteMeasure::validate() const {
  if (atoms.empty() || atoms.size() != weights.size())
    throw std::invalid_argument("measure: atoms/weights size mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("measure: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("measure: weights must sum to 1 within 1e-12");
  for (size_t i = 0; i < atoms.size(); ++i)
    for (size_t j = i + 1; j < atoms.size(); ++j)
      if (atoms[i] == atoms[j]) throw std::invalid_argument("measure: duplicate atom");
}

FiniteMeasure FiniteMeasure::uniform(std::vector<std::string> names) {
  FiniteMeasure mu;
  mu.atoms = std::move(names);
  mu.weights.assign(mu.atoms.size(), 1.0 / static_cast<double>(mu.atoms.size()));
  // Force an exact unit sum regardless of the division rounding.
  double sum = std::accumulate(mu.weights.begin(), mu.weights.end() - 1, 0.0);
  mu.weights.back() = 1.0 - sum;
  mu.validate();
  return mu;
}

WalkWord::WalkWord(const FiniteMeasure& mu, std::uint64_t seed, std::int64_t window)
    : seed_(seed), offset_(0), window_(window) {
  mu.validate();
  cum_.resize(mu.weights.size());
  double acc = 0.0;
  for (size_t i = 0; i < mu.weights.size(); ++i) {
    acc += mu.weights[i];
    cum_[i] = acc;
  }
  cum_.back() = 1.0;
}

int WalkWord::symbol(std::int64_t n) const {
  const std::int64_t idx = n + offset_;
  if (idx > window_ || idx < -window_) throw std::out_of_range("walk word: window exhausted");
  const double u = unit_double(mix64(seed_, zigzag(idx)));
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  const size_t k = static_cast<size_t>(it - cum_.begin());
  return static_cast<int>(std::min(k, cum_.size() - 1));
}

WalkWord WalkWord::shifted(std::int64_t m) const {
  WalkWord w(*this);
  w.offset_ += m;
  return w;
}

double omega_distance(const WalkWord& a, const WalkWord& b, int n_trunc) {
  if (a.n_atoms() != b.n_atoms())
    throw std::invalid_argument("omega_distance: words over different alphabets");
  double sum = (a.symbol(0) != b.symbol(0)) ? 1.0 : 0.0;
  double scale = 1.0;
  for (int n = 1; n <= n_trunc; ++n) {
    scale *= 0.5;
    if (a.symbol(n) != b.symbol(n)) sum += scale;
    if (a.symbol(-n) != b.symbol(-n)) sum += scale;
  }
  return sum;
}

Point compose(const SurfaceModel& model, const WalkWord& omega, std::int64_t n,
              const Point& x) {
  Point p = x;
  if (n >= 0) {
    for (std::int64_t j = 0; j < n; ++j) p = model.apply(omega.symbol(j), p);
  } else {
    for (std::int64_t j = 1; j <= -n; ++j) p = model.apply_inverse(omega.symbol(-j), p);
  }
  return p;
}

SkewState skew_step(const SurfaceModel& model, const SkewState& state, std::int64_t n) {
  return SkewState{compose(model, state.omega, n, state.x), state.omega.shifted(n)};
}

}  // namespace rsd
