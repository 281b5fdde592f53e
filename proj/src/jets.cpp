#include "rsd/jets.hpp"

#include <cmath>

namespace rsd {
namespace {

// One Richardson step for an O(h^2) central-difference estimate.
Eigen::VectorXd richardson(const Eigen::VectorXd& coarse, const Eigen::VectorXd& fine) {
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace

Jet2 jet_from_linear(const Eigen::MatrixXd& a) {
  Jet2 j;
  j.n = static_cast<int>(a.rows());
  j.jac = a;
  j.hess.assign(static_cast<std::size_t>(j.n), Eigen::MatrixXd::Zero(j.n, j.n));
  j.validate();
  return j;
}

Jet2 jet_from_map(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map, int n) {
  if (n != 2 && n != 4) throw std::invalid_argument("jet dimension must be 2 or 4");
  const Eigen::VectorXd f0 = map(Eigen::VectorXd::Zero(n));
  if (f0.norm() >= 1e-12)
    throw std::invalid_argument("jet_from_map: map does not fix the origin");
  const auto ev = [&](double sa, int a, double sb, int b) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    x[a] += sa;
    x[b] += sb;
    return map(x);
  };

  Jet2 j;
  j.n = n;
  j.jac = Eigen::MatrixXd::Zero(n, n);
  j.hess.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));

  const double h = 1e-4;
  for (int a = 0; a < n; ++a) {
    const auto d1 = [&](double step) {
      return Eigen::VectorXd((ev(step, a, 0, a) - ev(-step, a, 0, a)) / (2 * step));
    };
    j.jac.col(a) = richardson(d1(h), d1(h / 2));
    const auto d2 = [&](double step) {
      return Eigen::VectorXd((ev(step, a, 0, a) - 2 * f0 + ev(-step, a, 0, a)) / (step * step));
    };
    const Eigen::VectorXd haa = richardson(d2(h), d2(h / 2));
    for (int i = 0; i < n; ++i) j.hess[static_cast<std::size_t>(i)](a, a) = haa[i];
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const auto d2 = [&](double step) {
        return Eigen::VectorXd((ev(step, a, step, b) - ev(step, a, -step, b) -
                                ev(-step, a, step, b) + ev(-step, a, -step, b)) /
                               (4 * step * step));
      };
      const Eigen::VectorXd hab = richardson(d2(h), d2(h / 2));
      for (int i = 0; i < n; ++i) {
        j.hess[static_cast<std::size_t>(i)](a, b) = hab[i];
        j.hess[static_cast<std::size_t>(i)](b, a) = hab[i];
      }
    }
  return j;
}

Eigen::VectorXd jet_apply(const Jet2& jet, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = jet.jac * v;
  for (int i = 0; i < jet.n; ++i)
    out[i] += 0.5 * v.dot(jet.hess[static_cast<std::size_t>(i)] * v);
  return out;
}

double jet_partial_bound(const Jet2& jet) {
  double b = jet.jac.cwiseAbs().maxCoeff();
  for (const Eigen::MatrixXd& h : jet.hess) b = std::max(b, h.cwiseAbs().maxCoeff());
  return b;
}

double jet_matrix_bound(const Jet2& jet) {
  const double c = std::max(1.0, jet_partial_bound(jet));
  return 2.0 * c * c;
}

SecondDerivativeCheck second_derivative_check(const std::vector<Jet2>& chain) {
  if (chain.empty()) throw std::invalid_argument("second_derivative_check: empty chain");
  SecondDerivativeCheck res;
  double cmax = 0;
  Jet2 composed = Jet2::identity(chain.front().n);
  for (const Jet2& link : chain) {
    cmax = std::max(cmax, jet_matrix_bound(link));
    composed = jet_compose(link, composed);
  }
  res.constant = std::sqrt(60.0) * cmax;
  res.bound = std::pow(res.constant, static_cast<double>(chain.size()));
  res.measured = 0;
  for (const Eigen::MatrixXd& h : composed.hess)
    res.measured = std::max(res.measured, h.cwiseAbs().maxCoeff());
  res.ok = res.measured <= res.bound;
  res.composed = composed;
  return res;
}

}  // namespace rsd
