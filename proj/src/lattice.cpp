#include "rsd/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <boost/multiprecision/cpp_int.hpp>

namespace rsd {
namespace {

using Big = boost::multiprecision::cpp_int;

// Dense arbitrary-precision square matrix, row major.
struct BigMat {
  int n = 0;
  std::vector<Big> a;
  explicit BigMat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim) {}
  Big& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const Big& at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  static BigMat identity(int dim) {
    BigMat m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1;
    return m;
  }
  static BigMat from(const IMat& s) {
    BigMat m(static_cast<int>(s.rows()));
    for (int i = 0; i < m.n; ++i)
      for (int j = 0; j < m.n; ++j) m.at(i, j) = s(i, j);
    return m;
  }
};

BigMat operator*(const BigMat& x, const BigMat& y) {
  BigMat r(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      if (x.at(i, k) == 0) continue;
      for (int j = 0; j < x.n; ++j) r.at(i, j) += x.at(i, k) * y.at(k, j);
    }
  return r;
}

BigMat big_pow(BigMat base, std::int64_t e) {
  BigMat acc = BigMat::identity(base.n);
  while (e > 0) {
    if (e & 1) acc = acc * base;
    base = base * base;
    e >>= 1;
  }
  return acc;
}

bool is_big_identity(const BigMat& m) {
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      if (m.at(i, j) != (i == j ? 1 : 0)) return false;
  return true;
}

bool is_big_zero(const BigMat& m) {
  return std::all_of(m.a.begin(), m.a.end(), [](const Big& v) { return v == 0; });
}

std::int64_t euler_phi(std::int64_t m) {
  std::int64_t result = m;
  for (std::int64_t p = 2; p * p <= m; ++p) {
    if (m % p == 0) {
      while (m % p == 0) m /= p;
      result -= result / p;
    }
  }
  if (m > 1) result -= result / m;
  return result;
}

// lcm of all orders a root of unity of degree <= rank can have.
std::int64_t root_of_unity_order_bound(int rank) {
  std::int64_t k = 1;
  for (std::int64_t m = 1; m <= 4 * static_cast<std::int64_t>(rank) * rank + 20; ++m)
    if (euler_phi(m) <= rank) k = std::lcm(k, m);
  return k;
}

std::int64_t idet(const IMat& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  std::int64_t det = 0;
  IMat sub(n - 1, n - 1);
  for (int c = 0; c < n; ++c) {
    for (int i = 1; i < n; ++i)
      for (int j = 0, sj = 0; j < n; ++j)
        if (j != c) sub(i - 1, sj++) = m(i, j);
    const std::int64_t cofactor = (c % 2 == 0 ? 1 : -1) * m(0, c) * idet(sub);
    det += cofactor;
  }
  return det;
}

// Enumerates integer vectors with max-norm exactly r, lexicographic within
// the shell, calling fn(v); fn returns false to stop. Returns false if
// stopped early.
bool shell_scan(int rank, std::int64_t r, IVec& v, int pos, bool boundary_hit,
                const std::function<bool(const IVec&)>& fn) {
  if (pos == rank) return boundary_hit ? fn(v) : true;
  for (std::int64_t t = -r; t <= r; ++t) {
    v[pos] = t;
    if (!shell_scan(rank, r, v, pos + 1, boundary_hit || std::llabs(t) == r, fn))
      return false;
  }
  return true;
}

// Visits vectors in shells of increasing max-norm from 0 to bound.
void box_scan(int rank, std::int64_t bound, const std::function<bool(const IVec&)>& fn) {
  IVec v(rank);
  for (std::int64_t r = 0; r <= bound; ++r)
    if (!shell_scan(rank, r, v, 0, r == 0, fn)) return;
}

IVec canonical_sign(IVec v) {
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] == 0) continue;
    if (v[i] < 0) v = -v;
    break;
  }
  return v;
}

std::int64_t squarefree_part(std::int64_t d, std::int64_t& square_root_factor) {
  std::int64_t core = 1, f = 1;
  for (std::int64_t p = 2; p * p <= d; ++p) {
    int e = 0;
    while (d % p == 0) {
      d /= p;
      ++e;
    }
    for (int i = 0; i < e / 2; ++i) f *= p;
    if (e % 2) core *= p;
  }
  core *= d;
  square_root_factor = f;
  return core;
}

SurdDirection make_direction(std::int64_t p, std::int64_t q, std::int64_t r, std::int64_t d) {
  if (r == 0) return SurdDirection{1, 0, 0, 1};
  std::int64_t f = 1;
  d = squarefree_part(d, f);
  q *= f;
  if (d == 1) {
    p += q;
    q = 0;
  }
  if (r < 0) {
    p = -p;
    q = -q;
    r = -r;
  }
  std::int64_t g = std::gcd(std::gcd(std::llabs(p), std::llabs(q)), r);
  if (g > 1) {
    p /= g;
    q /= g;
    r /= g;
  }
  if (q == 0) d = 1;
  return SurdDirection{p, q, r, d};
}

}  // namespace

void IntLattice::validate() const {
  if (gram.rows() != gram.cols()) throw std::invalid_argument("gram matrix must be square");
  if (gram.rows() < 1) throw std::invalid_argument("gram matrix must be nonempty");
  for (int i = 0; i < gram.rows(); ++i)
    for (int j = 0; j < i; ++j)
      if (gram(i, j) != gram(j, i)) throw std::invalid_argument("gram matrix must be symmetric");
}

std::int64_t IntLattice::q(const IVec& v) const { return pair(v, v); }

std::int64_t IntLattice::pair(const IVec& a, const IVec& b) const {
  std::int64_t s = 0;
  for (int i = 0; i < gram.rows(); ++i)
    for (int j = 0; j < gram.cols(); ++j) s += a[i] * gram(i, j) * b[j];
  return s;
}

std::array<int, 3> IntLattice::signature() const {
  validate();
  const int n = rank();
  // Faddeev-LeVerrier: integer coefficients of det(lambda I - G).
  BigMat g = BigMat::from(gram);
  BigMat m = BigMat::identity(n);
  std::vector<Big> c(static_cast<std::size_t>(n) + 1);
  c[n] = 1;
  for (int k = 1; k <= n; ++k) {
    BigMat gm = g * m;
    Big tr = 0;
    for (int i = 0; i < n; ++i) tr += gm.at(i, i);
    c[n - k] = -tr / k;  // division exact by construction
    m = gm;
    for (int i = 0; i < n; ++i) m.at(i, i) += c[n - k];
  }
  int zero = 0;
  while (zero < n && c[zero] == 0) ++zero;
  // Symmetric matrix: all roots real, so Descartes' rule is exact.
  const auto sign_changes = [&](bool negate_odd) {
    int changes = 0, prev = 0;
    for (int i = n; i >= zero; --i) {
      if (c[i] == 0) continue;
      int s = c[i] > 0 ? 1 : -1;
      if (negate_odd && i % 2 == 1) s = -s;
      if (prev != 0 && s != prev) ++changes;
      prev = s;
    }
    return changes;
  };
  const int pos = sign_changes(false);
  const int neg = sign_changes(true);
  return {pos, neg, zero};
}

std::optional<std::pair<std::int64_t, std::int64_t>> IntLattice::pell_form() const {
  if (rank() != 2) return std::nullopt;
  if (gram(0, 1) != 0 || gram(1, 0) != 0) return std::nullopt;
  const std::int64_t c = gram(0, 0), e = gram(1, 1);
  if (c <= 0 || e >= 0 || e % c != 0) return std::nullopt;
  return std::make_pair(c, -e / c);
}

EvennessReport evenness(const IntLattice& lat) {
  lat.validate();
  for (int i = 0; i < lat.rank(); ++i)
    if (lat.gram(i, i) % 2 != 0) return {false, i, lat.gram(i, i)};
  return {true, -1, 0};
}

RepresentResult represents(const IntLattice& lat, std::int64_t value, std::int64_t bound) {
  lat.validate();
  if (bound < 1) throw std::invalid_argument("search bound must be >= 1");
  RepresentResult res;
  if (auto pell = lat.pell_form()) {
    // q = c(x^2 - d y^2) is divisible by c at every integer point.
    const std::int64_t c = pell->first;
    if (((value % c) + c) % c != 0) {
      res.certified_absent = true;
      res.method = "congruence";
      return res;
    }
  }
  res.method = "search";
  box_scan(lat.rank(), bound, [&](const IVec& v) {
    if (v.isZero() && value != 0) return true;
    if (lat.q(v) == value) {
      res.vec = canonical_sign(v);
      return false;
    }
    return true;
  });
  return res;
}

NullVectorsResult null_vectors(const IntLattice& lat, std::int64_t bound) {
  lat.validate();
  NullVectorsResult res;
  if (auto pell = lat.pell_form()) {
    const std::int64_t d = pell->second;
    std::int64_t f = 1;
    if (squarefree_part(d, f) != 1) {
      res.certified_empty = true;
      std::ostringstream os;
      os << "x^2 = " << d << " y^2 forces x = y = 0: sqrt(" << d << ") is irrational";
      res.certificate = os.str();
      return res;
    }
  }
  box_scan(lat.rank(), bound, [&](const IVec& v) {
    if (v.isZero()) return true;
    IVec canon = canonical_sign(v);
    if (canon != v) return true;  // keep one representative per +/- pair
    if (lat.q(v) == 0) res.vectors.push_back(canon);
    return true;
  });
  return res;
}

bool is_unipotent(const IMat& m) {
  const int n = static_cast<int>(m.rows());
  BigMat nil = BigMat::from(m);
  for (int i = 0; i < n; ++i) nil.at(i, i) -= 1;
  return is_big_zero(big_pow(nil, n));
}

IsometryClass classify_integer_matrix(const IMat& m, std::int64_t order_cap) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix must be square");
  const int n = static_cast<int>(m.rows());
  const std::int64_t k = root_of_unity_order_bound(n);
  if (k > order_cap) return IsometryClass::undecided;
  // Spectral radius <= 1 for an invertible integer matrix forces all
  // eigenvalues to be roots of unity of degree <= n (Kronecker), so M^k is
  // unipotent in that case; otherwise some eigenvalue exceeds 1 in modulus.
  const BigMat p = big_pow(BigMat::from(m), k);
  if (is_big_identity(p)) return IsometryClass::elliptic;
  BigMat nil = p;
  for (int i = 0; i < n; ++i) nil.at(i, i) -= 1;
  // M^k unipotent but not the identity has infinite order, so M does too.
  if (is_big_zero(big_pow(nil, n))) return IsometryClass::parabolic;
  return IsometryClass::loxodromic;
}

double spectral_radius(const IMat& m) {
  Eigen::MatrixXd md = m.cast<double>();
  return md.eigenvalues().cwiseAbs().maxCoeff();
}

bool SurdDirection::operator==(const SurdDirection& o) const {
  if (r == 0 || o.r == 0) return r == o.r;
  return d == o.d && p * o.r == o.p * r && q * o.r == o.q * r;
}

SurdDirection dominant_direction(const IMat& m) {
  if (m.rows() != 2 || m.cols() != 2) throw std::invalid_argument("dominant_direction: 2x2 only");
  const std::int64_t a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const std::int64_t t = a + d, det = a * d - b * c;
  const std::int64_t disc = t * t - 4 * det;
  if (c != 0) {
    // Dominant eigenvalue (t + s sqrt(disc))/2 with s = sign(t); direction
    // (z : 1) with z = (lambda - d)/c.
    if (disc <= 0 || t == 0) throw std::invalid_argument("dominant_direction: not loxodromic");
    const std::int64_t s = t > 0 ? 1 : -1;
    return make_direction(t - 2 * d, s, 2 * c, disc);
  }
  // Triangular: eigenvalues a and d.
  if (std::llabs(a) == std::llabs(d)) throw std::invalid_argument("dominant_direction: not loxodromic");
  if (std::llabs(a) > std::llabs(d)) return SurdDirection{1, 0, 0, 1};
  return make_direction(b, 0, d - a, 1);
}

IsometryScan isometries(const IntLattice& lat, std::int64_t entry_bound) {
  lat.validate();
  if (entry_bound < 1) throw std::invalid_argument("entry bound must be >= 1");
  const int n = lat.rank();
  // Meet in the middle: candidate j-th columns must have square G_jj; full
  // matrices assembled by backtracking on the pairwise cross constraints.
  std::vector<std::vector<IVec>> cols(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    box_scan(n, entry_bound, [&](const IVec& v) {
      if (!v.isZero() && lat.q(v) == lat.gram(j, j)) cols[static_cast<std::size_t>(j)].push_back(v);
      return true;
    });

  IsometryScan scan;
  std::vector<const IVec*> chosen(static_cast<std::size_t>(n));
  std::vector<SurdDirection> axes;
  const std::function<void(int)> assemble = [&](int j) {
    if (j == n) {
      IMat m(n, n);
      for (int k = 0; k < n; ++k) m.col(k) = *chosen[static_cast<std::size_t>(k)];
      if (std::llabs(idet(m)) != 1) return;
      scan.elements.push_back(m);
      const IsometryClass cls = classify_integer_matrix(m);
      if (cls == IsometryClass::loxodromic) {
        ++scan.n_loxodromic;
        if (n == 2) {
          const SurdDirection axis = dominant_direction(m);
          if (std::find(axes.begin(), axes.end(), axis) == axes.end()) axes.push_back(axis);
        }
      } else if (cls == IsometryClass::parabolic) {
        scan.parabolic_found = true;
      }
      return;
    }
    for (const IVec& v : cols[static_cast<std::size_t>(j)]) {
      bool ok = true;
      for (int i = 0; i < j && ok; ++i)
        ok = lat.pair(*chosen[static_cast<std::size_t>(i)], v) == lat.gram(i, j);
      if (!ok) continue;
      chosen[static_cast<std::size_t>(j)] = &v;
      assemble(j + 1);
    }
  };
  assemble(0);
  scan.n_distinct_axes = static_cast<int>(axes.size());
  return scan;
}

ParabolicAbsence parabolic_absence(const IntLattice& lat, std::int64_t entry_bound) {
  lat.validate();
  if (lat.rank() != 2) throw std::invalid_argument("parabolic_absence: rank-2 lattices only");
  ParabolicAbsence res;
  const NullVectorsResult nulls = null_vectors(lat, entry_bound);
  if (nulls.certified_empty) {
    res.certified = true;
    res.certificate = "no isotropic vectors: " + nulls.certificate;
  } else if (nulls.vectors.empty()) {
    res.certificate = "no null vectors found in box, not certified";
  } else {
    res.certificate = "null vectors exist, certification unavailable; isometry scan decides";
  }
  res.scan_clean = !isometries(lat, entry_bound).parabolic_found;
  return res;
}

WeylTriviality weyl_trivial(const IntLattice& lat, std::int64_t bound) {
  const RepresentResult rep = represents(lat, -2, bound);
  WeylTriviality res;
  if (rep.vec) {
    res.trivial = false;
    res.certified = true;  // explicit root found
  } else {
    res.trivial = true;
    res.certified = rep.certified_absent;
  }
  return res;
}

AppendixReport appendix_report(const IntLattice& lat, std::int64_t entry_bound) {
  AppendixReport rep;
  rep.even = is_even(lat);
  const RepresentResult minus_two = represents(lat, -2, entry_bound);
  rep.no_minus_two = !minus_two.vec.has_value();
  rep.minus_two_certified = minus_two.certified_absent;
  const NullVectorsResult nulls = null_vectors(lat, entry_bound);
  rep.no_null_vectors = nulls.vectors.empty();
  rep.null_certified = nulls.certified_empty;
  const IsometryScan scan = isometries(lat, entry_bound);
  rep.n_loxodromic = scan.n_loxodromic;
  rep.n_distinct_axes = scan.n_distinct_axes;
  rep.enough_hyperbolic = scan.n_loxodromic >= 2 && scan.n_distinct_axes >= 2;
  if (lat.rank() == 2) {
    const ParabolicAbsence pa = parabolic_absence(lat, entry_bound);
    rep.parabolic_absent = pa.certified;
    rep.parabolic_scan_clean = pa.scan_clean;
  } else {
    rep.parabolic_scan_clean = !scan.parabolic_found;
  }
  return rep;
}

}  // namespace rsd
