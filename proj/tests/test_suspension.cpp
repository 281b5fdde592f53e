#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "rsd/suspension.hpp"

using namespace rsd;

namespace {

const double kLam = std::log((3.0 + std::sqrt(5.0)) / 2.0);
const double kLamAB = 0.915662;  // pilot exponent of the uniform {A, B} product

TorusModel single_a() {
  TorusModel m;
  Eigen::Matrix2i a;
  a << 2, 1, 1, 1;
  m.add_generator_complex("A", a);
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

RoofConfig config_a() { return RoofConfig{kLam, -kLam, 0.1, 8, 32}; }
RoofConfig config_ab() { return RoofConfig{kLamAB, -kLamAB, 0.1, 10, 32}; }

std::complex<double> cplx(const Eigen::Vector2d& v) { return {v[0], v[1]}; }

}  // namespace

TEST_CASE("roof values satisfy the cohomology identity inside the slack band") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  const RoofConfig rc = config_ab();
  for (int i = 0; i < 20; ++i) {
    WalkWord w(mu, 1000 + i);
    MixStream rs(700 + i);
    const Point x = m.random_point(rs);
    RoofData r = roof(m, w, x, rc);
    CHECK(r.tau > 0.0);
    CHECK(std::abs(r.tau - (r.theta - r.phi_fx + r.phi)) < 1e-10);
    CHECK(r.tau > kLamAB - rc.eps);
    CHECK(r.tau < kLamAB + rc.eps);

    // same deterministic evaluation as the underlying chart step
    ChartStep st = chart_step(m, w, x, rc.lambda_plus, rc.lambda_minus, rc.eps, rc.norm_window,
                              rc.frame_window);
    CHECK(r.tau == st.tau);
    CHECK(r.theta == st.theta);
    CHECK(r.phi == st.phi_x);
  }

  // constant derivative: roof equals theta equals the top exponent
  TorusModel ms = single_a();
  FiniteMeasure mus = FiniteMeasure::uniform({"A"});
  WalkWord w(mus, 3);
  Point x;
  x.x << 0.2, 0.7, 0.4, 0.9;
  RoofData r = roof(ms, w, x, config_a());
  CHECK(std::abs(r.tau - kLam) < 1e-12);
  CHECK(std::abs(r.theta - kLam) < 1e-12);
  CHECK(std::abs(r.phi - r.phi_fx) < 1e-12);
}

TEST_CASE("roof partial sums are a cocycle over the shift") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  const RoofConfig rc = config_ab();
  WalkWord w(mu, 321);
  MixStream rs(321);
  const Point x = m.random_point(rs);

  CHECK(roof_partial_sum(m, w, x, 0, rc) == 0.0);
  CHECK(roof_partial_sum(m, w, x, 3, rc) > 0.0);
  CHECK(roof_partial_sum(m, w, x, -3, rc) < 0.0);

  for (auto [p, q] : std::vector<std::pair<int, int>>{{2, 3}, {3, -2}, {-2, -1}, {-1, 4}}) {
    const double lhs = roof_partial_sum(m, w, x, p + q, rc);
    const double rhs = roof_partial_sum(m, w, x, p, rc) +
                       roof_partial_sum(m, w.shifted(p), compose(m, w, p, x), q, rc);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("standard flow applies floor-many maps and keeps the fractional part") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  WalkWord w(mu, 11);
  MixStream rs(11);
  const Point x = m.random_point(rs);

  SuspensionPoint z{x, w, 0.2};
  SuspensionPoint id = standard_flow(m, z, 0.0);
  CHECK(id.omega.offset() == w.offset());
  CHECK(id.k == z.k);
  CHECK(m.distance(id.x, x) == 0.0);

  SuspensionPoint a = standard_flow(m, z, 0.9);  // crosses one boundary
  CHECK(a.omega.offset() == w.offset() + 1);
  CHECK(a.k == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(m.distance(a.x, compose(m, w, 1, x)) == 0.0);

  SuspensionPoint b = standard_flow(m, z, -0.3);  // floor(-0.1) = -1
  CHECK(b.omega.offset() == w.offset() - 1);
  CHECK(b.k == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(m.distance(b.x, compose(m, w, -1, x)) < 1e-12);

  SuspensionPoint c = standard_flow(m, z, 0.8);  // boundary belongs to the new cell
  CHECK(c.omega.offset() == w.offset() + 1);
  CHECK(c.k == 0.0);
}

TEST_CASE("standard flow is additive and invertible") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  MixStream rs(42);
  for (int i = 0; i < 200; ++i) {
    WalkWord w(mu, 9000 + i);
    SuspensionPoint z{m.random_point(rs), w, rs.next_double()};
    const double t1 = rs.next_in(-4.0, 4.0), t2 = rs.next_in(-4.0, 4.0);

    SuspensionPoint a = standard_flow(m, standard_flow(m, z, t1), t2);
    SuspensionPoint b = standard_flow(m, z, t1 + t2);
    CHECK(a.omega.offset() == b.omega.offset());
    CHECK(std::abs(a.k - b.k) < 1e-9);
    CHECK(m.distance(a.x, b.x) < 1e-9);

    SuspensionPoint c = standard_flow(m, standard_flow(m, z, t1), -t1);
    CHECK(c.omega.offset() == z.omega.offset());
    CHECK(std::abs(c.k - z.k) < 1e-9);
    CHECK(m.distance(c.x, z.x) < 1e-9);
  }
}

TEST_CASE("time-changed flow is additive and invertible") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  const RoofConfig rc = config_ab();
  MixStream rs(43);
  for (int i = 0; i < 200; ++i) {
    WalkWord w(mu, 9500 + i);
    SuspensionPoint z{m.random_point(rs), w, rs.next_double()};
    const double t1 = rs.next_in(-2.0, 2.0), t2 = rs.next_in(-2.0, 2.0);

    SuspensionPoint a = time_changed_flow(m, time_changed_flow(m, z, t1, rc), t2, rc);
    SuspensionPoint b = time_changed_flow(m, z, t1 + t2, rc);
    CHECK(a.omega.offset() == b.omega.offset());
    CHECK(std::abs(a.k - b.k) < 1e-9);
    CHECK(m.distance(a.x, b.x) < 1e-9);

    SuspensionPoint c = time_changed_flow(m, time_changed_flow(m, z, t1, rc), -t1, rc);
    CHECK(c.omega.offset() == z.omega.offset());
    CHECK(std::abs(c.k - z.k) < 1e-9);
    CHECK(m.distance(c.x, z.x) < 1e-9);
  }
}

TEST_CASE("constant roof makes the time-changed flow count cells exactly") {
  TorusModel m = single_a();
  FiniteMeasure mu = FiniteMeasure::uniform({"A"});
  const RoofConfig rc = config_a();
  WalkWord w(mu, 3);
  Point x;
  x.x << 0.2, 0.7, 0.4, 0.9;
  const double tau0 = roof(m, w, x, rc).tau;
  SuspensionPoint z{x, w, 0.0};

  SuspensionPoint id = time_changed_flow(m, z, 0.0, rc);
  CHECK(id.omega.offset() == w.offset());
  CHECK(id.k == 0.0);

  SuspensionPoint f3 = time_changed_flow(m, z, 3.0 * tau0, rc);
  CHECK(f3.omega.offset() == w.offset() + 3);
  CHECK(f3.k == 0.0);
  CHECK(m.distance(f3.x, compose(m, w, 3, x)) == 0.0);

  SuspensionPoint back = time_changed_flow(m, f3, -3.0 * tau0, rc);
  CHECK(back.omega.offset() == w.offset());
  CHECK(back.k == 0.0);
  CHECK(m.distance(back.x, x) < 1e-12);

  SuspensionPoint half = time_changed_flow(m, z, 0.5 * tau0, rc);
  CHECK(half.omega.offset() == w.offset());
  CHECK(half.k == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("time-changed flow expands modified leaf distances by the elapsed budget") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  const RoofConfig rc = config_ab();
  double worst = 0;
  for (int i = 0; i < 6; ++i) {
    WalkWord w(mu, 1000 + i);
    MixStream rs(700 + i);
    const Point x = m.random_point(rs);
    LeafGraph lu = local_manifold(m, w, x, 'u', 0.05, 14, kLamAB, -kLamAB, rc.eps, rc.norm_window,
                                  rc.frame_window);
    NormalForm nx = normal_form(m, w, lu, x, kLamAB, -kLamAB, rc.eps, rc.norm_window,
                                rc.frame_window, 1e-9, 40);
    Eigen::VectorXd s1(2), s2(2);
    s1 << 0.012, 0.005;
    s2 << -0.009, 0.004;
    const Point z1 = leaf_point(m, lu, s1), z2 = leaf_point(m, lu, s2);
    const double d0 =
        std::exp(-nx.phi) * std::abs(cplx(nf_value(m, nx, z1)) - cplx(nf_value(m, nx, z2)));
    REQUIRE(d0 > 0.0);
    for (double ell : {0.5, 1.0, 2.0}) {
      const SuspensionPoint f = time_changed_flow(m, SuspensionPoint{x, w, 0.0}, ell, rc);
      const std::int64_t j = f.omega.offset() - w.offset();
      WalkWord wj = w.shifted(j);
      LeafGraph lj = local_manifold(m, wj, f.x, 'u', 0.05, 14, kLamAB, -kLamAB, rc.eps,
                                    rc.norm_window, rc.frame_window);
      NormalForm nj = normal_form(m, wj, lj, f.x, kLamAB, -kLamAB, rc.eps, rc.norm_window,
                                  rc.frame_window, 1e-9, 40);
      const Point z1j = compose(m, w, j, z1), z2j = compose(m, w, j, z2);
      const double tauj = roof(m, wj, f.x, rc).tau;
      const double dl = std::exp(-nj.phi) *
                        std::abs(cplx(nf_value(m, nj, z1j)) - cplx(nf_value(m, nj, z2j))) *
                        std::exp(f.k * tauj);
      worst = std::max(worst, std::abs(dl / d0 - std::exp(ell)) / std::exp(ell));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("suspension operations validate their inputs") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  const RoofConfig rc = config_ab();
  WalkWord w(mu, 1);
  MixStream rs(1);
  const Point x = m.random_point(rs);
  const double inf = std::numeric_limits<double>::infinity();

  CHECK_THROWS_AS(standard_flow(m, SuspensionPoint{x, w, 1.2}, 0.5), FlowError);
  CHECK_THROWS_AS(standard_flow(m, SuspensionPoint{x, w, -0.1}, 0.5), FlowError);
  CHECK_THROWS_AS(standard_flow(m, SuspensionPoint{x, w, 0.5}, inf), FlowError);
  CHECK_THROWS_AS(time_changed_flow(m, SuspensionPoint{x, w, 1.0}, 0.5, rc), FlowError);
  CHECK_THROWS_AS(time_changed_flow(m, SuspensionPoint{x, w, 0.5}, inf, rc), FlowError);
  CHECK_THROWS_AS(tc_normalizer(m, mu, rc, 0, 1), FlowError);
  CHECK_THROWS_AS(tc_density(m, SuspensionPoint{x, w, 0.5}, rc, 0.0), FlowError);
  CHECK_THROWS_AS(tc_density(m, SuspensionPoint{x, w, 0.5}, rc, -1.0), FlowError);
  CHECK_THROWS_AS(
      birkhoff_diagnostic(m, SuspensionPoint{x, w, 0.5}, [](const Point&) { return true; },
                          {4.0, 0.0}, 1.0),
      FlowError);
}

TEST_CASE("invariant density is the normalized roof") {
  TorusModel ms = single_a();
  FiniteMeasure mus = FiniteMeasure::uniform({"A"});
  const RoofConfig rca = config_a();
  const double c = tc_normalizer(ms, mus, rca, 50, 77);
  for (std::uint64_t s : {5u, 6u, 7u}) {
    WalkWord w(mus, s);
    MixStream rs(s);
    SuspensionPoint z{ms.random_point(rs), w, 0.2};
    CHECK(tc_density(ms, z, rca, c) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  const RoofConfig rc = config_ab();
  const double cab = tc_normalizer(m, mu, rc, 400, 88);
  MixStream rs(99);
  double mean = 0;
  for (int i = 0; i < 400; ++i) {
    WalkWord wi(mu, 40000 + i);
    SuspensionPoint z{m.random_point(rs), wi, 0.0};
    const double den = tc_density(m, z, rc, cab);
    CHECK(den >= cab * (kLamAB - rc.eps));
    CHECK(den <= cab * (kLamAB + rc.eps));
    mean += den;
  }
  // fresh ensemble integrates to one within Monte-Carlo error
  CHECK(std::abs(mean / 400 - 1.0) < 0.01);
}

TEST_CASE("time averages along the flow settle at the ensemble average") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  WalkWord w(mu, 20000);
  MixStream rs0(7);
  SuspensionPoint z0{m.random_point(rs0), w, 0.3};

  auto rows_full = birkhoff_diagnostic(m, z0, [](const Point&) { return true; }, {5.5}, 1.0);
  CHECK(rows_full[0].time_avg == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rows_full[0].gap < 1e-12);
  auto rows_empty = birkhoff_diagnostic(m, z0, [](const Point&) { return false; }, {5.5}, 0.0);
  CHECK(rows_empty[0].time_avg == 0.0);

  // coordinate box at Lebesgue mass 1/2: gaps shrink like a CLT in T
  const std::vector<double> ts{64.0, 256.0, 1024.0};
  MixStream rs(1234);
  double worst_scaled = 0;
  for (int s = 0; s < 100; ++s) {
    WalkWord ws(mu, 20000 + s);
    SuspensionPoint z{m.random_point(rs), ws, rs.next_double()};
    auto rows = birkhoff_diagnostic(m, z, [](const Point& p) { return p.x[0] < 0.5; }, ts, 0.5);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
      CHECK(r.gap == std::abs(r.time_avg - r.ens_avg));
      worst_scaled = std::max(worst_scaled, r.gap * std::sqrt(r.t_len));
    }
  }
  CHECK(worst_scaled < 3.0);

  std::ostringstream os;
  write_birkhoff_csv(os, 20000, rows_full);
  CHECK(os.str().rfind("seed,T,time_avg,ens_avg,gap\n20000,5.5,1,", 0) == 0);
}

TEST_CASE("a uniform cloud stays uniform per coordinate under the flow") {
  TorusModel m = ab_pair();
  FiniteMeasure mu = FiniteMeasure::uniform({"A", "B"});
  const int n = 2000;
  std::vector<std::vector<double>> before(4), after(4);
  MixStream rs(555);
  for (int i = 0; i < n; ++i) {
    WalkWord w(mu, 30000 + i);
    SuspensionPoint z{m.random_point(rs), w, rs.next_double()};
    for (int c = 0; c < 4; ++c) before[c].push_back(z.x.x[c]);
    const SuspensionPoint f = standard_flow(m, z, 3.7);
    for (int c = 0; c < 4; ++c) after[c].push_back(f.x.x[c]);
  }
  for (int c = 0; c < 4; ++c) {
    std::sort(before[c].begin(), before[c].end());
    std::sort(after[c].begin(), after[c].end());
    double ks = 0;
    std::size_t ia = 0, ib = 0;
    while (ia < before[c].size() && ib < after[c].size()) {
      if (before[c][ia] <= after[c][ib])
        ++ia;
      else
        ++ib;
      ks = std::max(ks, std::abs(double(ia) / n - double(ib) / n));
    }
    CHECK(ks < 0.06);  // two-sample 1% critical value is ~0.052 at this n
  }
}
