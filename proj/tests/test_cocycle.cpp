#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rsd/cocycle.hpp"
#include "rsd/models.hpp"
#include "rsd/rng.hpp"
#include "rsd/walk.hpp"

using namespace rsd;

namespace {

const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;
const double kLam = std::log((3.0 + std::sqrt(5.0)) / 2.0);

Point tpoint(double a, double b, double c, double d) {
  Point p;
  p.x << a, b, c, d;
  return p;
}

TorusModel single_a() {
  TorusModel m;
  Eigen::Matrix2i a;
  a << 2, 1, 1, 1;
  m.add_generator_complex("A", a);
  return m;
}

TorusModel cat_pair() {
  TorusModel m;
  Eigen::Matrix2i a, ai;
  a << 2, 1, 1, 1;
  ai << 1, -1, -1, 2;
  m.add_generator_complex("A", a);
  m.add_generator_complex("Ainv", ai);
  return m;
}

TorusModel ab_pair() {
  TorusModel m;
  Eigen::Matrix2i a, b;
  a << 2, 1, 1, 1;
  b << 1, 1, 1, 2;
  m.add_generator_complex("A", a);
  m.add_generator_complex("B", b);
  return m;
}

TorusModel ab_inverse_pair() {
  TorusModel m;
  Eigen::Matrix2i ai, bi;
  ai << 1, -1, -1, 2;
  bi << 2, -1, -1, 1;
  m.add_generator_complex("Ainv", ai);
  m.add_generator_complex("Binv", bi);
  return m;
}

TorusModel identity_model() {
  TorusModel m;
  m.add_generator_complex("I", Eigen::Matrix2i::Identity());
  return m;
}

WehlerModel markov2() {
  WehlerModel m = WehlerModel::markov(2.0);
  m.add_generator("s123", {0, 1, 2});
  m.add_generator("s132", {0, 2, 1});
  return m;
}

// Real 2-planes of the expanding/contracting complex eigenvectors of
// [[2,1],[1,1]] in (Re z1, Im z1, Re z2, Im z2) coordinates.
Eigen::MatrixXd golden_unstable() {
  const double s = std::sqrt(1.0 + kPhi * kPhi);
  Eigen::MatrixXd u(4, 2);
  u << kPhi / s, 0, 0, kPhi / s, 1 / s, 0, 0, 1 / s;
  return u;
}

Eigen::MatrixXd golden_stable() {
  const double s = std::sqrt(1.0 + kPhi * kPhi);
  Eigen::MatrixXd v(4, 2);
  v << 1 / s, 0, 0, 1 / s, -kPhi / s, 0, 0, -kPhi / s;
  return v;
}

// Tangent directions compared across base points must live in one coordinate
// system. Stored-chart components flip through t = 1/s, so push each frame
// column to true affine coordinates before normalizing.
Eigen::Vector3d affine_direction(const WehlerModel& m, const Point& p, const Eigen::VectorXd& coord) {
  Eigen::Vector3d v = m.tangent_frame(p) * coord;
  for (int i = 0; i < 3; ++i)
    if (p.inv[i]) v(i) = -v(i) / (p.x[i] * p.x[i]);
  return v.normalized();
}

}  // namespace

TEST_CASE("exponent estimation rejects bad inputs") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  const Point x0 = tpoint(0.1, 0.2, 0.3, 0.4);
  CHECK_THROWS_AS(lyapunov_exponents(m, mu, x0, 1, 99), std::invalid_argument);

  FiniteMeasure wrong_name = FiniteMeasure::uniform({"B"});
  CHECK_THROWS_AS(lyapunov_exponents(m, wrong_name, x0, 1, 1000), std::invalid_argument);

  FiniteMeasure too_many = FiniteMeasure::uniform({"A", "B"});
  CHECK_THROWS_AS(lyapunov_exponents(m, too_many, x0, 1, 1000), std::invalid_argument);
}

TEST_CASE("single-matrix exponents match eigenvalue arithmetic") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  ExponentEstimate est = lyapunov_exponents(m, mu, tpoint(0.12, 0.41, 0.77, 0.05), 1, 10000);

  REQUIRE(est.exponents.size() == 4);
  CHECK(std::abs(est.exponents[0] - kLam) < 1e-6);
  CHECK(std::abs(est.exponents[1] - kLam) < 1e-6);
  CHECK(std::abs(est.exponents[2] + kLam) < 1e-6);
  CHECK(std::abs(est.exponents[3] + kLam) < 1e-6);
  // complex-linear cocycle: exponents come in equal pairs
  CHECK(std::abs(est.exponents[0] - est.exponents[1]) < 1e-9);
  CHECK(std::abs(est.exponents[2] - est.exponents[3]) < 1e-9);
  const double sum4 = est.exponents[0] + est.exponents[1] + est.exponents[2] + est.exponents[3];
  CHECK(std::abs(sum4) < 1e-9);
  CHECK(std::abs(est.det_rate) < 1e-12);
  CHECK(est.lambda_plus == est.exponents.front());
  CHECK(est.lambda_minus == est.exponents.back());
  CHECK(est.converged);
  CHECK(est.n == 9900);  // alignment transient excluded from the averages
}

TEST_CASE("identity-only support gives exponents exactly zero") {
  TorusModel m = identity_model();
  FiniteMeasure mu = FiniteMeasure::uniform({"I"});
  ExponentEstimate est = lyapunov_exponents(m, mu, tpoint(0.3, 0.1, 0.9, 0.6), 4, 500);
  for (double e : est.exponents) CHECK(e == 0.0);
  CHECK(est.det_rate == 0.0);
  CHECK(est.converged);
}

TEST_CASE("volume preservation forces the exponent sum to vanish") {
  TorusModel m = cat_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "Ainv"});
  ExponentEstimate est = lyapunov_exponents(m, mu, tpoint(0.21, 0.34, 0.55, 0.13), 5, 100000);

  const double comb_se = est.stderrs.front() + est.stderrs.back();
  CHECK(std::abs(est.lambda_plus + est.lambda_minus) <= 3 * comb_se);
  const double sum4 = est.exponents[0] + est.exponents[1] + est.exponents[2] + est.exponents[3];
  CHECK(std::abs(sum4 - est.det_rate) < 1e-9);
  CHECK(std::abs(est.det_rate) < 1e-12);  // every generator has determinant one
}

TEST_CASE("reversal duality negates the spectrum") {
  const Point x0 = tpoint(0.21, 0.34, 0.55, 0.13);
  FiniteMeasure mu_f = FiniteMeasure::uniform({"A", "B"});
  FiniteMeasure mu_b = FiniteMeasure::uniform({"Ainv", "Binv"});
  TorusModel fwd = ab_pair();
  TorusModel bwd = ab_inverse_pair();
  ExponentEstimate ef = lyapunov_exponents(fwd, mu_f, x0, 5, 20000);
  ExponentEstimate eb = lyapunov_exponents(bwd, mu_b, x0, 77, 20000);

  CHECK(ef.converged);
  CHECK(eb.converged);
  // top exponent of the inverse-generator system = -(bottom of the original)
  const double resid = std::abs(eb.lambda_plus + ef.lambda_minus);
  CHECK(resid <= 3 * (ef.stderrs.back() + eb.stderrs.front()));
}

TEST_CASE("oseledets planes recover the eigenplanes of a single matrix") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  WalkWord omega(mu, 9);
  OseledetsFrame f = oseledets_splitting(m, omega, tpoint(0.37, 0.81, 0.14, 0.66), 40, 40);

  CHECK(grassmann_distance(f.Eu, golden_unstable()) < 1e-8);
  CHECK(grassmann_distance(f.Es, golden_stable()) < 1e-8);
  // the two planes are orthogonal, so the principal angle is exactly pi/2
  CHECK(std::abs(f.angle - std::acos(0.0)) < 1e-12);
  CHECK(f.equivariance < 1e-6);
  CHECK(f.n_used == 40);
}

TEST_CASE("oseledets flags degenerate splittings") {
  TorusModel m = identity_model();
  FiniteMeasure mu = FiniteMeasure::uniform({"I"});
  WalkWord omega(mu, 2);
  CHECK_THROWS_AS(oseledets_splitting(m, omega, tpoint(0.5, 0.25, 0.75, 0.4), 30, 30),
                  DegenerateSplitting);
  TorusModel ma = single_a();
  FiniteMeasure mua = FiniteMeasure::uniform({"A"});
  WalkWord oa(mua, 2);
  CHECK_THROWS_AS(oseledets_splitting(ma, oa, tpoint(0.5, 0.25, 0.75, 0.4), 1, 30),
                  std::invalid_argument);
}

TEST_CASE("random-product frames stay equivariant across seeds") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  int degenerate = 0;
  double worst = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    WalkWord omega(mu, s);
    MixStream rs(s + 300);
    const Point x = m.random_point(rs);
    try {
      OseledetsFrame f = oseledets_splitting(m, omega, x, 40, 40);
      worst = std::max(worst, f.equivariance);
    } catch (const DegenerateSplitting&) {
      ++degenerate;
    }
  }
  CHECK(degenerate == 0);
  CHECK(worst < 1e-6);
}

TEST_CASE("grassmann distance and principal angle on explicit frames") {
  Eigen::MatrixXd u(3, 1), v(3, 1);
  u << 1, 0, 0;
  const double th = 0.3;
  v << std::cos(th), std::sin(th), 0;
  CHECK(grassmann_distance(u, v) == doctest::Approx(std::sin(th)).epsilon(1e-12));
  CHECK(principal_angle(u, v) == doctest::Approx(th).epsilon(1e-12));

  Eigen::MatrixXd p(4, 2), q(4, 2), r(4, 2);
  p << 1, 0, 0, 1, 0, 0, 0, 0;
  q << 0, 0, 0, 0, 1, 0, 0, 1;
  const double c = 1 / std::sqrt(2.0);
  r << c, c, c, -c, 0, 0, 0, 0;
  CHECK(grassmann_distance(p, q) == doctest::Approx(1.0).epsilon(1e-12));
  // same plane, rotated basis: only resolvable down to sqrt(machine eps)
  CHECK(grassmann_distance(p, r) < 1e-7);

  Eigen::MatrixXd bad = 2.0 * u;
  CHECK_THROWS_AS(grassmann_distance(bad, v), std::invalid_argument);
  CHECK_THROWS_AS(grassmann_distance(u, p), std::invalid_argument);
}

TEST_CASE("lyapunov norm dominates the euclidean norm and grows with the window") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  WalkWord omega(mu, 3);
  const Point x = tpoint(0.9, 0.2, 0.8, 0.45);
  const double eps0 = default_eps0(kLam, -kLam);

  MixStream rs(17);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd v(4);
    for (int i = 0; i < 4; ++i) v(i) = rs.next_in(-1.0, 1.0);
    CHECK(lyapunov_norm(m, omega, x, v, kLam, eps0, 0) == v.norm());
    double prev = 0;
    for (int n = 0; n <= 10; ++n) {
      const double val = lyapunov_norm(m, omega, x, v, kLam, eps0, n);
      CHECK(val >= v.norm());
      CHECK(val >= prev - 1e-12);
      prev = val;
    }
  }

  Eigen::VectorXd v(4);
  v << 1, 0, 0, 0;
  CHECK_THROWS_AS(lyapunov_norm(m, omega, x, v, kLam, eps0, -1), std::invalid_argument);
  CHECK_THROWS_AS(lyapunov_norm(m, omega, x, v, kLam, 0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(lyapunov_norm(m, omega, x, Eigen::VectorXd::Zero(4), kLam, eps0, 4),
                  std::invalid_argument);
}

TEST_CASE("lyapunov norm matches the closed-form geometric sum") {
  // On the expanding eigenplane every step scales by e^{lambda} exactly, so
  // the truncated sum collapses to |v|^2 * sum_{|n|<=N} e^{-2 eps0 |n|}.
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  WalkWord omega(mu, 3);
  const Point x = tpoint(0.31, 0.64, 0.27, 0.88);
  const double eps0 = default_eps0(kLam, -kLam);
  const Eigen::MatrixXd u = golden_unstable();

  MixStream rs(29);
  for (int N : {4, 6, 8, 10}) {
    double closed = 1.0;
    for (int n = 1; n <= N; ++n) closed += 2 * std::exp(-2.0 * eps0 * n);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd v = u * Eigen::Vector2d(rs.next_in(-2.0, 2.0), rs.next_in(-2.0, 2.0));
      const double expect = v.norm() * std::sqrt(closed);
      const double got = lyapunov_norm(m, omega, x, v, kLam, eps0, N);
      CHECK(std::abs(got - expect) <= 1e-10 * expect);
    }
  }
}

TEST_CASE("one-step lyapunov norm ratio respects the exponent sandwich") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  WalkWord omega(mu, 3);
  const Point x = tpoint(0.42, 0.17, 0.93, 0.56);
  const double eps0 = default_eps0(kLam, -kLam);
  const Eigen::MatrixXd u = golden_unstable();
  const int N = 6;

  const TangentMap tm = m.tangent(0, x);
  const WalkWord shifted = omega.shifted(1);
  MixStream rs(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd v = u * Eigen::Vector2d(rs.next_in(-2.0, 2.0), rs.next_in(-2.0, 2.0));
    if (v.norm() < 1e-6) continue;
    const double den = lyapunov_norm(m, omega, x, v, kLam, eps0, N);
    const double num = lyapunov_norm(m, shifted, tm.image, tm.matrix * v, kLam, eps0, N);
    const double ratio = num / den;
    CHECK(ratio >= std::exp(kLam - eps0) - 1e-8);
    CHECK(ratio <= std::exp(kLam + eps0) + 1e-8);
  }
}

TEST_CASE("default slack scales with the exponent magnitudes") {
  CHECK(default_eps0(kLam, -kLam) == doctest::Approx(kLam / 2000.0).epsilon(1e-14));
  CHECK(default_eps0(500.0, -400.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK_THROWS_AS(default_eps0(0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(default_eps0(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("orbit point composes the walk in both directions") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  WalkWord omega(mu, 8);
  const Point x = tpoint(0.11, 0.72, 0.38, 0.91);

  Point fwd = x;
  for (int j = 0; j < 5; ++j) fwd = m.apply(omega.symbol(j), fwd);
  CHECK((orbit_point(m, omega, x, 5).x - fwd.x).cwiseAbs().maxCoeff() < 1e-15);

  Point bwd = x;
  for (int j = 1; j <= 3; ++j) bwd = m.apply_inverse(omega.symbol(-j), bwd);
  CHECK((orbit_point(m, omega, x, -3).x - bwd.x).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((orbit_point(m, omega, x, 0).x - x.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform hyperbolicity yields unit orbit constants") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  WalkWord omega(mu, 6);
  const Point x = tpoint(0.61, 0.24, 0.83, 0.47);
  const double eps0 = default_eps0(kLam, -kLam);

  for (int N : {4, 8, 12}) {
    NuhReport rep = nuh_estimate(m, omega, x, N, eps0, kLam, -kLam, 32);
    CHECK(std::abs(rep.L_hat - 1.0) < 1e-6);  // bounded uniformly in N
    CHECK(rep.L_stable <= 1.0 + 1e-9);
    CHECK(rep.L_unstable <= 1.0 + 1e-9);
    CHECK(std::abs(rep.min_angle - std::acos(0.0)) < 1e-9);
    CHECK(rep.angles.size() == static_cast<std::size_t>(2 * N + 1));
  }
}

TEST_CASE("angle bound holds along random-product orbits") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  ExponentEstimate est = lyapunov_exponents(m, mu, tpoint(0.21, 0.34, 0.55, 0.13), 7, 20000);
  const double eps0 = default_eps0(est.lambda_plus, est.lambda_minus);

  WalkWord omega(mu, 19);
  MixStream rs(23);
  const Point x = m.random_point(rs);
  const int N = 8;
  NuhReport rep = nuh_estimate(m, omega, x, N, eps0, est.lambda_plus, est.lambda_minus, 48);
  CHECK(rep.L_hat >= 1.0);
  CHECK(rep.L_hat < 2.0);
  CHECK(rep.min_angle > 0.9);
  for (int n = -N; n <= N; ++n) {
    const double floor = std::exp(-std::abs(n) * eps0) / rep.L_hat;
    CHECK(rep.angles[static_cast<std::size_t>(n + N)] >= floor * (1 - 1e-12));
  }
}

TEST_CASE("orbit constants grow at most like the damping rate") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  ExponentEstimate est = lyapunov_exponents(m, mu, tpoint(0.21, 0.34, 0.55, 0.13), 7, 20000);
  const double eps0 = default_eps0(est.lambda_plus, est.lambda_minus);

  const int K = 5, J = 2000;
  int ok = 0, total = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    WalkWord omega(mu, s);
    MixStream rs(s + 100);
    const Point x = m.random_point(rs);
    const std::vector<double> L =
        nuh_orbit_constants(m, omega, x, K, J, 4, eps0, est.lambda_plus, est.lambda_minus, 32);
    const double base = L[K];
    for (int k = -K; k <= K; ++k) {
      if (k == 0) continue;
      ++total;
      // ulp slack: with one dominating constant the bound is an exact tie
      if (L[static_cast<std::size_t>(k + K)] <= base * std::exp(eps0 * std::abs(k)) * (1 + 1e-12))
        ++ok;
    }
  }
  CHECK(total == 100);
  CHECK(ok >= 99);
}

TEST_CASE("orbit constant estimators reject bad parameters") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  WalkWord omega(mu, 1);
  const Point x = tpoint(0.2, 0.4, 0.6, 0.8);
  CHECK_THROWS_AS(nuh_estimate(m, omega, x, 0, 1e-3, kLam, -kLam, 32), std::invalid_argument);
  CHECK_THROWS_AS(nuh_estimate(m, omega, x, 4, 0.0, kLam, -kLam, 32), std::invalid_argument);
  CHECK_THROWS_AS(nuh_estimate(m, omega, x, 4, 1e-3, kLam, -kLam, 1), std::invalid_argument);
  CHECK_THROWS_AS(nuh_orbit_constants(m, omega, x, -1, 10, 4, 1e-3, kLam, -kLam, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(nuh_orbit_constants(m, omega, x, 2, 0, 4, 1e-3, kLam, -kLam, 16),
                  std::invalid_argument);
}

TEST_CASE("subspace distance saturates at separated base points") {
  TorusModel m = single_a();
  SubspaceSample a, b;
  a.x = tpoint(0.1, 0.1, 0.1, 0.1);
  a.frame = golden_unstable();
  b.x = tpoint(0.6, 0.6, 0.6, 0.6);
  b.frame = golden_stable();
  // base distance 1.0 >= rho0/4
  CHECK(subspace_distance(m, a, b, 2.0) == 1.0);

  b.x = tpoint(0.1001, 0.1, 0.1, 0.1);
  CHECK(subspace_distance(m, a, b, 2.0) ==
        doctest::Approx(grassmann_distance(a.frame, b.frame)).epsilon(1e-12));
  CHECK_THROWS_AS(subspace_distance(m, a, b, 0.0), std::invalid_argument);
}

TEST_CASE("stable block membership separates true frames from mixed ones") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  WalkWord omega(mu, 12);
  const Point x = tpoint(0.15, 0.85, 0.35, 0.65);
  const Eigen::MatrixXd es = golden_stable();

  CHECK(pesin_block_member(m, omega, x, es, -kLam + 0.1, kLam - 0.1, 2.0, 10));
  // demanding faster contraction than the true rate must fail
  CHECK_FALSE(pesin_block_member(m, omega, x, es, -kLam - 0.2, kLam - 0.1, 1.0, 10));

  // a 45-degree mix of stable and unstable directions expands
  Eigen::MatrixXd mixed(4, 2);
  mixed.col(0) = (golden_stable().col(0) + golden_unstable().col(0)) / std::sqrt(2.0);
  mixed.col(1) = (golden_stable().col(1) + golden_unstable().col(1)) / std::sqrt(2.0);
  CHECK_FALSE(pesin_block_member(m, omega, x, mixed, -kLam + 0.1, kLam - 0.1, 2.0, 10));

  CHECK_THROWS_AS(pesin_block_member(m, omega, x, es, 0.5, 0.5, 2.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(pesin_block_member(m, omega, x, es, -1.0, 1.0, 0.5, 10), std::invalid_argument);
  CHECK_THROWS_AS(pesin_block_member(m, omega, x, es, -1.0, 1.0, 2.0, 0), std::invalid_argument);
}

TEST_CASE("holder diagnostic flags position-independent fields") {
  // Linear torus generators share one pair of invariant planes, so the
  // unstable field never varies with the base point, even for random words.
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  WalkWord omega(mu, 21);
  MixStream rs(33);

  std::vector<SubspaceSample> samples;
  double spread = 0;
  Eigen::MatrixXd first;
  for (int i = 0; i < 30; ++i) {
    SubspaceSample s;
    s.x = m.random_point(rs);
    OseledetsFrame f = oseledets_splitting(m, omega, s.x, 30, 30);
    if (i == 0)
      first = f.Eu;
    else
      spread = std::max(spread, grassmann_distance(first, f.Eu));
    s.frame = f.Eu;
    samples.push_back(std::move(s));
  }
  CHECK(spread < 1e-7);

  HolderFit fit = holder_diagnostic(m, samples, -0.25, 0.25, 30.0, 10.0, 3.0, 4.0);
  CHECK(fit.n_pairs >= 30);
  CHECK_FALSE(fit.constrained);
  CHECK_FALSE(fit.at_least_ref);
  CHECK(fit.alpha_hat == 0.0);
}

TEST_CASE("holder diagnostic requires thirty pairs") {
  TorusModel m = single_a();
  std::vector<SubspaceSample> samples(5);
  for (int i = 0; i < 5; ++i) {
    samples[static_cast<std::size_t>(i)].x = tpoint(0.1 + 0.01 * i, 0.2, 0.3, 0.4);
    samples[static_cast<std::size_t>(i)].frame = golden_unstable();
  }
  CHECK_THROWS_AS(holder_diagnostic(m, samples, -0.25, 0.25, 30.0, 10.0, 3.0, 4.0),
                  std::runtime_error);
  CHECK_THROWS_AS(holder_diagnostic(m, samples, 0.5, 0.25, 30.0, 10.0, 3.0, 4.0),
                  std::invalid_argument);
}

TEST_CASE("holder regression bounds the exponent on surface blocks") {
  WehlerModel m = markov2();
  FiniteMeasure mu = FiniteMeasure::uniform({"s123", "s132"});
  const double a = -0.25, b = 0.25, block_c = 30.0;

  int passed = 0;
  for (std::uint64_t wseed : {41ull, 42ull, 43ull, 44ull, 45ull}) {
    WalkWord omega(mu, wseed);
    MixStream rs(7);
    std::vector<SubspaceSample> samples;
    int tried = 0;
    while (samples.size() < 60 && tried < 400) {
      ++tried;
      const Point x = m.random_point(rs);
      try {
        OseledetsFrame f = oseledets_splitting(m, omega, x, 30, 30);
        if (!pesin_block_member(m, omega, x, f.Es, a, b, block_c, 12)) continue;
        SubspaceSample s;
        s.x = x;
        s.frame = affine_direction(m, x, f.Es.col(0));
        samples.push_back(std::move(s));
      } catch (const DegenerateSplitting&) {
      }
    }
    REQUIRE(samples.size() == 60);
    HolderFit fit = holder_diagnostic(m, samples, a, b, block_c, 10.0, 3.0, 1.0);
    CHECK(fit.n_pairs >= 30);
    CHECK(fit.constrained);
    if (fit.at_least_ref) ++passed;
  }
  CHECK(passed >= 4);  // at least 70% of the sampled word-blocks
}

TEST_CASE("surface exponents are symmetric and internally consistent") {
  WehlerModel m = markov2();
  FiniteMeasure mu = FiniteMeasure::uniform({"s123", "s132"});
  MixStream rs(5);
  const Point x0 = m.random_point(rs);
  ExponentEstimate est = lyapunov_exponents(m, mu, x0, 3, 20000);

  REQUIRE(est.exponents.size() == 2);
  CHECK(est.exponents[0] > 0.32);
  CHECK(est.exponents[0] < 0.38);
  const double sum = est.exponents[0] + est.exponents[1];
  CHECK(std::abs(sum - est.det_rate) < 1e-12);
  CHECK(std::abs(sum) < 1e-3);  // area preservation up to finite-time drift
  CHECK(est.converged);
}

TEST_CASE("surface oseledets splittings stay nondegenerate across seeds") {
  WehlerModel m = markov2();
  FiniteMeasure mu = FiniteMeasure::uniform({"s123", "s132"});
  int degenerate = 0;
  double worst_eq = 0, min_angle = 10;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    WalkWord omega(mu, s);
    MixStream rs(s + 500);
    const Point x = m.random_point(rs);
    try {
      OseledetsFrame f = oseledets_splitting(m, omega, x, 40, 40);
      worst_eq = std::max(worst_eq, f.equivariance);
      min_angle = std::min(min_angle, f.angle);
    } catch (const DegenerateSplitting&) {
      ++degenerate;
    }
  }
  CHECK(degenerate == 0);
  CHECK(worst_eq < 1e-6);
  CHECK(min_angle > 5e-3);
}
