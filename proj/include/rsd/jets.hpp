#pragma once
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace rsd {

// Degree-2 jet of an origin-fixing map on n variables (n in {2, 4}), stored
// as raw partial derivatives: jac(i, a) = d f_i / d x_a and
// hess[i](a, b) = d^2 f_i / d x_a d x_b at 0. No constant term.
template <typename Scalar>
struct JetT {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int n = 2;
  Mat jac;
  std::vector<Mat> hess;

  static JetT identity(int dim) {
    JetT j;
    j.n = dim;
    j.jac = Mat::Identity(dim, dim);
    j.hess.assign(static_cast<std::size_t>(dim), Mat::Zero(dim, dim));
    return j;
  }

  void validate() const {
    if (n != 2 && n != 4) throw std::invalid_argument("jet dimension must be 2 or 4");
    if (jac.rows() != n || jac.cols() != n) throw std::invalid_argument("jet jacobian shape");
    if (static_cast<int>(hess.size()) != n) throw std::invalid_argument("jet hessian count");
    for (const Mat& h : hess) {
      if (h.rows() != n || h.cols() != n) throw std::invalid_argument("jet hessian shape");
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          if (h(a, b) != h(b, a)) throw std::invalid_argument("jet hessian must be symmetric");
    }
  }
};

using Jet2 = JetT<double>;
using Jet2Rational = JetT<boost::multiprecision::cpp_rational>;

// Jet of f. g (g applied first), exact chain rule truncated at degree 2.
// Scalar loops (not Eigen products) so multiprecision scalars instantiate
// cleanly.
template <typename Scalar>
JetT<Scalar> jet_compose(const JetT<Scalar>& f, const JetT<Scalar>& g) {
  if (f.n != g.n) throw std::invalid_argument("jet_compose: dimension mismatch");
  using M = typename JetT<Scalar>::Mat;
  const int n = f.n;
  JetT<Scalar> r;
  r.n = n;
  r.jac = M::Zero(n, n);
  r.hess.assign(static_cast<std::size_t>(n), M::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) {
      Scalar s{};
      for (int u = 0; u < n; ++u) s += f.jac(i, u) * g.jac(u, a);
      r.jac(i, a) = s;
    }
  for (int i = 0; i < n; ++i) {
    const auto& fh = f.hess[static_cast<std::size_t>(i)];
    auto& rh = r.hess[static_cast<std::size_t>(i)];
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        Scalar s{};
        for (int u = 0; u < n; ++u) {
          s += f.jac(i, u) * g.hess[static_cast<std::size_t>(u)](a, b);
          for (int v = 0; v < n; ++v) s += fh(u, v) * g.jac(u, a) * g.jac(v, b);
        }
        rh(a, b) = s;
        rh(b, a) = s;  // exact symmetry by construction
      }
  }
  return r;
}

// Basis slot layout per output coordinate: n = 2 uses (x, y, x^2, y^2, xy),
// 5 slots; n = 4 prepends a constant slot to 4 linear + 4 square + 6 cross,
// 15 slots, cross pairs ordered (01,02,03,12,13,23).
inline int jet_block_size(int n) { return n == 2 ? 5 : 15; }

inline std::vector<std::pair<int, int>> jet_cross_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return pairs;
}

// Matrix of h -> h . f on raw-partial coordinate vectors of scalar jets h:
// block * partials(h) = partials(h . f). Chain rule makes the top-left
// linear block the transposed Jacobian and fills the quadratic rows with
// products of first partials.
template <typename Scalar>
typename JetT<Scalar>::Mat precomposition_block(const JetT<Scalar>& f) {
  using M = typename JetT<Scalar>::Mat;
  f.validate();
  const int n = f.n;
  const int sz = jet_block_size(n);
  const bool with_const = n == 4;
  const int lin0 = with_const ? 1 : 0;
  const int sq0 = lin0 + n;
  const int cr0 = sq0 + n;
  const auto pairs = jet_cross_pairs(n);

  M m = M::Zero(sz, sz);
  if (with_const) m(0, 0) = 1;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i) m(lin0 + a, lin0 + i) = f.jac(i, a);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < n; ++i) {
      m(sq0 + a, lin0 + i) = f.hess[static_cast<std::size_t>(i)](a, a);
      m(sq0 + a, sq0 + i) = f.jac(i, a) * f.jac(i, a);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p)
      m(sq0 + a, cr0 + static_cast<int>(p)) =
          2 * f.jac(pairs[p].first, a) * f.jac(pairs[p].second, a);
  }
  for (std::size_t row = 0; row < pairs.size(); ++row) {
    const int a = pairs[row].first, b = pairs[row].second;
    for (int i = 0; i < n; ++i) {
      m(cr0 + static_cast<int>(row), lin0 + i) = f.hess[static_cast<std::size_t>(i)](a, b);
      m(cr0 + static_cast<int>(row), sq0 + i) = f.jac(i, a) * f.jac(i, b);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const int u = pairs[p].first, v = pairs[p].second;
      m(cr0 + static_cast<int>(row), cr0 + static_cast<int>(p)) =
          f.jac(u, a) * f.jac(v, b) + f.jac(u, b) * f.jac(v, a);
    }
  }
  return m;
}

// Full matrix: one identical block per output coordinate of h.
template <typename Scalar>
typename JetT<Scalar>::Mat precomposition_matrix(const JetT<Scalar>& f) {
  using M = typename JetT<Scalar>::Mat;
  const M block = precomposition_block(f);
  const int sz = static_cast<int>(block.rows());
  M m = M::Zero(sz * f.n, sz * f.n);
  for (int i = 0; i < f.n; ++i) m.block(i * sz, i * sz, sz, sz) = block;
  return m;
}

Jet2 jet_from_linear(const Eigen::MatrixXd& a);

// Jet by central finite differences (step 1e-4, one Richardson refinement);
// throws if |map(0)| >= 1e-12.
Jet2 jet_from_map(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map, int n);

// Degree-2 Taylor evaluation f(v) = J v + (v^T H_i v)/2.
Eigen::VectorXd jet_apply(const Jet2& jet, const Eigen::VectorXd& v);

double jet_partial_bound(const Jet2& jet);  // max abs first/second partial
double jet_matrix_bound(const Jet2& jet);   // 2 max(1, partial bound)^2; bounds block entries

// Chain bound: |second partials of the composed chain| <= C^len with
// C = sqrt(60) * max per-map matrix bound. chain[0] acts first.
struct SecondDerivativeCheck {
  double constant = 0;  // C
  double bound = 0;     // C^len
  double measured = 0;  // max abs second partial of the composed jet
  bool ok = false;
  Jet2 composed;
};
SecondDerivativeCheck second_derivative_check(const std::vector<Jet2>& chain);

}  // namespace rsd
