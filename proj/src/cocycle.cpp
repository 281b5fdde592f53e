#include "rsd/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace rsd {
namespace {

// Thin QR with nonnegative R diagonal, replacing m by its Q factor.
void qr_inplace(Eigen::MatrixXd& m, Eigen::VectorXd* logs) {
  const Eigen::Index k = m.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), k);
  if (logs) logs->resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double d = qr.matrixQR()(i, i);
    if (d < 0) {
      q.col(i) = -q.col(i);
      d = -d;
    }
    if (logs) {
      if (d <= 0) throw DegenerateSplitting("cocycle frame collapsed during QR sweep");
      (*logs)(i) = std::log(d);
    }
  }
  m = std::move(q);
}

void check_frame(const Eigen::MatrixXd& u) {
  const Eigen::MatrixXd g = u.transpose() * u;
  if ((g - Eigen::MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("frame columns are not orthonormal");
}

void check_measure_names(const SurfaceModel& model, const FiniteMeasure& mu) {
  if (static_cast<int>(mu.atoms.size()) > model.n_autos())
    throw std::invalid_argument("measure has more atoms than model automorphisms");
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if (mu.atoms[i] != model.auto_name(static_cast<int>(i)))
      throw std::invalid_argument("measure atom " + std::to_string(i) +
                                  " does not name automorphism " + std::to_string(i));
}

struct CoreFrames {
  Eigen::MatrixXd eu, es;
  double lambda_plus = 0, lambda_minus = 0;
};

// Push a half-dimensional frame in from each end of the realized window:
// forward from F^{-n_bwd} for Eu, backward from F^{n_fwd} for Es.
CoreFrames oseledets_core(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                          int n_fwd, int n_bwd) {
  if (n_fwd < 1 || n_bwd < 1)
    throw std::invalid_argument("oseledets windows must be at least 1");
  const int d = model.cocycle_dim();
  const int k = d / 2;

  std::vector<Point> fwd(static_cast<std::size_t>(n_fwd) + 1);
  fwd[0] = x;
  for (int j = 0; j < n_fwd; ++j)
    fwd[static_cast<std::size_t>(j) + 1] = model.apply(omega.symbol(j), fwd[j]);
  std::vector<Point> bwd(static_cast<std::size_t>(n_bwd) + 1);
  bwd[0] = x;
  for (int j = 1; j <= n_bwd; ++j)
    bwd[j] = model.apply_inverse(omega.symbol(-j), bwd[static_cast<std::size_t>(j) - 1]);

  Eigen::VectorXd logs(k);
  CoreFrames out;
  out.eu = Eigen::MatrixXd::Identity(d, k);
  double top_fwd = 0;
  for (int j = n_bwd; j >= 1; --j) {
    const TangentMap tm = model.tangent(omega.symbol(-j), bwd[j]);
    Eigen::MatrixXd z = tm.matrix * out.eu;
    qr_inplace(z, &logs);
    out.eu = std::move(z);
    top_fwd += logs(0);
  }
  out.es = Eigen::MatrixXd::Identity(d, k);
  double top_bwd = 0;
  for (int j = n_fwd - 1; j >= 0; --j) {
    const TangentMap tm = model.tangent_inverse(omega.symbol(j), fwd[static_cast<std::size_t>(j) + 1]);
    Eigen::MatrixXd z = tm.matrix * out.es;
    qr_inplace(z, &logs);
    out.es = std::move(z);
    top_bwd += logs(0);
  }
  out.lambda_plus = top_fwd / n_bwd;
  out.lambda_minus = -(top_bwd / n_fwd);
  return out;
}

// Largest L forced by the growth sandwich of Df^n restricted to a span,
// swept over n = sign * 1 .. sign * N.
double sandwich_need(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                     const Eigen::MatrixXd& frame, double lam, int sign, int N, double eps0) {
  double need = 1;
  Eigen::MatrixXd w = frame;
  double scale = 0;
  Point p = x;
  for (int j = 1; j <= N; ++j) {
    const TangentMap tm = sign > 0 ? model.tangent(omega.symbol(j - 1), p)
                                   : model.tangent_inverse(omega.symbol(-j), p);
    w = tm.matrix * w;
    p = tm.image;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
    const double smax = svd.singularValues().maxCoeff();
    const double smin = svd.singularValues().minCoeff();
    const double log_hi = scale + std::log(smax);
    const double log_lo = scale + std::log(smin);
    const int n = sign * j;
    need = std::max(need, std::exp(log_hi - n * lam - std::abs(n) * eps0 / 2));
    need = std::max(need, std::exp(n * lam - std::abs(n) * eps0 / 2 - log_lo));
    w /= smax;
    scale += std::log(smax);
  }
  return need;
}

}  // namespace

ExponentEstimate lyapunov_exponents(const SurfaceModel& model, const FiniteMeasure& mu,
                                    const Point& x0, std::uint64_t seed, int n) {
  if (n < 100) throw std::invalid_argument("lyapunov_exponents: n must be at least 100");
  mu.validate();
  check_measure_names(model, mu);

  // The frame needs a few steps to align with the filtration; those steps
  // carry an O(1/n) bias, so they are excluded from every average.
  const int burn = std::min(100, n / 10);
  const int kept = n - burn;
  const int d = model.cocycle_dim();
  const WalkWord omega(mu, seed);
  Point p = x0;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd incs(d, kept);
  Eigen::VectorXd logs(d);
  double det_sum = 0;
  for (int j = 0; j < n; ++j) {
    const TangentMap tm = model.tangent(omega.symbol(j), p);
    Eigen::MatrixXd z = tm.matrix * q;
    qr_inplace(z, &logs);
    q = std::move(z);
    if (j >= burn) {
      det_sum += std::log(std::abs(tm.matrix.determinant()));
      incs.col(j - burn) = logs;
    }
    p = tm.image;
  }

  ExponentEstimate est;
  est.n = kept;
  est.det_rate = det_sum / kept;

  const int n_batches = 32;
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd means = incs.rowwise().mean();
  std::sort(order.begin(), order.end(), [&](int a, int b) { return means(a) > means(b); });

  est.converged = true;
  for (int idx : order) {
    const Eigen::RowVectorXd row = incs.row(idx);
    est.exponents.push_back(means(idx));

    double var_b = 0;
    std::vector<double> bm(n_batches);
    for (int b = 0; b < n_batches; ++b) {
      const int lo = b * kept / n_batches, hi = (b + 1) * kept / n_batches;
      bm[b] = row.segment(lo, hi - lo).mean();
    }
    const double bmean = std::accumulate(bm.begin(), bm.end(), 0.0) / n_batches;
    for (double v : bm) var_b += (v - bmean) * (v - bmean);
    var_b /= (n_batches - 1);
    const double se = std::sqrt(var_b / n_batches);
    est.stderrs.push_back(se);

    const int tail = kept - 3 * kept / 4;
    const double drift = std::abs(row.tail(tail).mean() - means(idx));
    if (drift > 10 * se + 1e-8) est.converged = false;
  }
  est.lambda_plus = est.exponents.front();
  est.lambda_minus = est.exponents.back();
  return est;
}

double grassmann_distance(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::invalid_argument("grassmann_distance: shape mismatch");
  check_frame(u);
  check_frame(v);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(u.transpose() * v);
  const double c = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

double principal_angle(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  if (u.rows() != v.rows())
    throw std::invalid_argument("principal_angle: ambient dimension mismatch");
  check_frame(u);
  check_frame(v);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(u.transpose() * v);
  const double c = std::min(1.0, svd.singularValues().maxCoeff());
  return std::acos(c);
}

OseledetsFrame oseledets_splitting(const SurfaceModel& model, const WalkWord& omega,
                                   const Point& x, int n_fwd, int n_bwd) {
  if (n_fwd < 2) throw std::invalid_argument("oseledets_splitting: n_fwd must be at least 2");
  const CoreFrames core = oseledets_core(model, omega, x, n_fwd, n_bwd);

  OseledetsFrame frame;
  frame.x = x;
  frame.Eu = core.eu;
  frame.Es = core.es;
  frame.lambda_plus = core.lambda_plus;
  frame.lambda_minus = core.lambda_minus;
  frame.n_used = std::min(n_fwd, n_bwd);
  frame.angle = principal_angle(core.eu, core.es);
  if (frame.angle < 1e-8)
    throw DegenerateSplitting("oseledets_splitting: stable and unstable spans coincide");

  const TangentMap tm0 = model.tangent(omega.symbol(0), x);
  const CoreFrames next = oseledets_core(model, omega.shifted(1), tm0.image, n_fwd - 1, n_bwd + 1);
  Eigen::MatrixXd pushed = tm0.matrix * core.eu;
  qr_inplace(pushed, nullptr);
  frame.equivariance = grassmann_distance(pushed, next.eu);
  return frame;
}

double lyapunov_norm(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                     const Eigen::VectorXd& v, double lambda_b, double eps0, int N) {
  if (N < 0) throw std::invalid_argument("lyapunov_norm: N must be nonnegative");
  if (eps0 <= 0) throw std::invalid_argument("lyapunov_norm: eps0 must be positive");
  const double v0 = v.norm();
  if (v0 <= 0) throw std::invalid_argument("lyapunov_norm: zero vector");
  if (N == 0) return v0;

  std::vector<double> terms;
  terms.reserve(2 * static_cast<std::size_t>(N) + 1);
  terms.push_back(2 * std::log(v0));
  Eigen::VectorXd w = v / v0;
  double c = std::log(v0);
  Point p = x;
  for (int j = 1; j <= N; ++j) {
    const TangentMap tm = model.tangent(omega.symbol(j - 1), p);
    w = tm.matrix * w;
    const double s = w.norm();
    c += std::log(s);
    w /= s;
    p = tm.image;
    terms.push_back(2 * (c - lambda_b * j - eps0 * j));
  }
  w = v / v0;
  c = std::log(v0);
  p = x;
  for (int j = 1; j <= N; ++j) {
    const TangentMap tm = model.tangent_inverse(omega.symbol(-j), p);
    w = tm.matrix * w;
    const double s = w.norm();
    c += std::log(s);
    w /= s;
    p = tm.image;
    terms.push_back(2 * (c + lambda_b * j - eps0 * j));
  }
  const double m = *std::max_element(terms.begin(), terms.end());
  double acc = 0;
  for (double t : terms) acc += std::exp(t - m);
  return std::max(v0, std::exp(0.5 * (m + std::log(acc))));
}

double default_eps0(double lambda_plus, double lambda_minus) {
  if (!(lambda_plus > 0) || !(lambda_minus < 0))
    throw std::invalid_argument("default_eps0: requires lambda_plus > 0 > lambda_minus");
  return std::min({1.0, lambda_plus / 200, -lambda_minus / 200}) / 10;
}

Point orbit_point(const SurfaceModel& model, const WalkWord& omega, const Point& x, int n) {
  Point p = x;
  if (n >= 0)
    for (int j = 0; j < n; ++j) p = model.apply(omega.symbol(j), p);
  else
    for (int j = 1; j <= -n; ++j) p = model.apply_inverse(omega.symbol(-j), p);
  return p;
}

NuhReport nuh_estimate(const SurfaceModel& model, const WalkWord& omega, const Point& x, int N,
                       double eps0, double lambda_plus, double lambda_minus, int frame_window) {
  if (N < 1) throw std::invalid_argument("nuh_estimate: N must be at least 1");
  if (eps0 <= 0) throw std::invalid_argument("nuh_estimate: eps0 must be positive");
  if (frame_window < 2) throw std::invalid_argument("nuh_estimate: frame_window too small");

  const CoreFrames core = oseledets_core(model, omega, x, frame_window, frame_window);
  NuhReport rep;
  rep.N = N;
  rep.eps0 = eps0;

  rep.L_stable = std::max(sandwich_need(model, omega, x, core.es, lambda_minus, +1, N, eps0),
                          sandwich_need(model, omega, x, core.es, lambda_minus, -1, N, eps0));
  rep.L_unstable = std::max(sandwich_need(model, omega, x, core.eu, lambda_plus, +1, N, eps0),
                            sandwich_need(model, omega, x, core.eu, lambda_plus, -1, N, eps0));

  rep.min_angle = 4;  // above any possible angle
  for (int n = -N; n <= N; ++n) {
    const Point pn = orbit_point(model, omega, x, n);
    const CoreFrames cn = oseledets_core(model, omega.shifted(n), pn, frame_window, frame_window);
    const double ang = principal_angle(cn.eu, cn.es);
    if (ang <= 0) throw DegenerateSplitting("nuh_estimate: splitting collapsed along the orbit");
    rep.angles.push_back(ang);
    rep.min_angle = std::min(rep.min_angle, ang);
    rep.L_angle = std::max(rep.L_angle, std::exp(-std::abs(n) * eps0) / ang);
  }
  rep.L_hat = std::max({1.0, rep.L_stable, rep.L_unstable, rep.L_angle});
  return rep;
}

std::vector<double> nuh_orbit_constants(const SurfaceModel& model, const WalkWord& omega,
                                        const Point& x, int K, int J, int N, double eps0,
                                        double lambda_plus, double lambda_minus,
                                        int frame_window) {
  if (K < 0 || J < 1) throw std::invalid_argument("nuh_orbit_constants: need K >= 0, J >= 1");
  if (N < 1) throw std::invalid_argument("nuh_orbit_constants: N must be at least 1");
  if (eps0 <= 0) throw std::invalid_argument("nuh_orbit_constants: eps0 must be positive");

  const int M = K + J;
  std::vector<double> c(2 * static_cast<std::size_t>(M) + 1);
  Point p = orbit_point(model, omega, x, -M);
  for (int m = -M; m <= M; ++m) {
    const WalkWord w = omega.shifted(m);
    const CoreFrames core = oseledets_core(model, w, p, frame_window, frame_window);
    const double ang = principal_angle(core.eu, core.es);
    if (ang <= 0) throw DegenerateSplitting("nuh_orbit_constants: splitting collapsed");
    double need = std::max(1.0, 1.0 / ang);
    need = std::max(need, sandwich_need(model, w, p, core.es, lambda_minus, +1, N, eps0));
    need = std::max(need, sandwich_need(model, w, p, core.es, lambda_minus, -1, N, eps0));
    need = std::max(need, sandwich_need(model, w, p, core.eu, lambda_plus, +1, N, eps0));
    need = std::max(need, sandwich_need(model, w, p, core.eu, lambda_plus, -1, N, eps0));
    c[static_cast<std::size_t>(m + M)] = need;
    if (m < M) p = model.apply(omega.symbol(m), p);
  }
  std::vector<double> out(2 * static_cast<std::size_t>(K) + 1);
  for (int k = -K; k <= K; ++k) {
    double best = 0;
    for (int j = -J; j <= J; ++j)
      best = std::max(best, c[static_cast<std::size_t>(k + j + M)] * std::exp(-eps0 * std::abs(j)));
    out[static_cast<std::size_t>(k + K)] = best;
  }
  return out;
}

double subspace_distance(const SurfaceModel& model, const SubspaceSample& a,
                         const SubspaceSample& b, double rho0) {
  if (rho0 <= 0) throw std::invalid_argument("subspace_distance: rho0 must be positive");
  if (model.distance(a.x, b.x) >= rho0 / 4) return 1.0;
  return grassmann_distance(a.frame, b.frame);
}

bool pesin_block_member(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                        const Eigen::MatrixXd& stable_frame, double a, double b, double C, int N) {
  if (!(a < b)) throw std::invalid_argument("pesin_block_member: requires a < b");
  if (C < 1) throw std::invalid_argument("pesin_block_member: requires C >= 1");
  if (N < 1) throw std::invalid_argument("pesin_block_member: N must be at least 1");
  check_frame(stable_frame);
  const int d = model.cocycle_dim();
  const Eigen::Index k = stable_frame.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> full(stable_frame);
  const Eigen::MatrixXd comp =
      (full.householderQ() * Eigen::MatrixXd::Identity(d, d)).rightCols(d - k);

  Eigen::MatrixXd ws = stable_frame, wc = comp;
  double ss = 0, sc = 0;
  Point p = x;
  for (int n = 1; n <= N; ++n) {
    const TangentMap tm = model.tangent(omega.symbol(n - 1), p);
    ws = tm.matrix * ws;
    wc = tm.matrix * wc;
    p = tm.image;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_s(ws), svd_c(wc);
    const double smax = svd_s.singularValues().maxCoeff();
    const double cmin = svd_c.singularValues().minCoeff();
    if (ss + std::log(smax) > std::log(C) + a * n) return false;
    if (sc + std::log(cmin) < b * n - std::log(C)) return false;
    ws /= smax;
    ss += std::log(smax);
    const double cmax = svd_c.singularValues().maxCoeff();
    wc /= cmax;
    sc += std::log(cmax);
  }
  return true;
}

HolderFit holder_diagnostic(const SurfaceModel& model, const std::vector<SubspaceSample>& samples,
                            double a, double b, double block_C, double growth_C, double growth_c,
                            double rho0) {
  if (!(a < b)) throw std::invalid_argument("holder_diagnostic: requires a < b");
  if (block_C < 1 || growth_C < 1 || growth_c <= 0 || rho0 <= 0)
    throw std::invalid_argument("holder_diagnostic: bad constants");

  const double dref = std::log(2 * growth_C * growth_C) + 2 * growth_c +
                      std::abs(std::log(rho0 / 4)) + std::abs(a);
  HolderFit fit;
  fit.alpha_ref = (a - b) / (a - dref);

  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double dx = model.distance(samples[i].x, samples[j].x);
      if (dx <= 0 || dx >= rho0 / 4) continue;
      ++fit.n_pairs;
      const double de = grassmann_distance(samples[i].frame, samples[j].frame);
      // sin-angle distances cannot resolve below sqrt(machine eps); anything
      // under that floor is indistinguishable from a coincident pair
      if (de > 1.5e-7) pts.emplace_back(std::log(dx), std::log(de));
    }
  if (fit.n_pairs < 30)
    throw std::runtime_error("holder_diagnostic: fewer than 30 in-range sample pairs");
  if (pts.size() < 3) return fit;  // constant field: exponent unconstrained

  double mx = 0, my = 0;
  for (const auto& [t, y] : pts) {
    mx += t;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0, sxy = 0;
  for (const auto& [t, y] : pts) {
    sxx += (t - mx) * (t - mx);
    sxy += (t - mx) * (y - my);
  }
  if (sxx < 1e-12) return fit;  // all pairs at one distance scale
  fit.constrained = true;
  fit.alpha_hat = sxy / sxx;
  const double intercept = my - fit.alpha_hat * mx;
  fit.L_hat = std::exp(intercept);
  double ssr = 0;
  for (const auto& [t, y] : pts) {
    const double r = y - intercept - fit.alpha_hat * t;
    ssr += r * r;
  }
  fit.alpha_se = std::sqrt(ssr / (static_cast<double>(pts.size()) - 2) / sxx);
  fit.at_least_ref = fit.alpha_hat + 2 * fit.alpha_se >= fit.alpha_ref;
  return fit;
}

}  // namespace rsd
