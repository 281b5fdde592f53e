#include "rsd/charts.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rsd {

namespace {

// Multiplication by i in the (Re z1, Im z1, Re z2, Im z2) coordinates.
Eigen::Matrix4d complex_structure4() {
  Eigen::Matrix4d j;
  j << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0;
  return j;
}

// Orthonormal frame of the column span with the second vector aligned to
// i times the first, so 2x2 derivative blocks between such frames are
// conformal up to estimation error.
Eigen::MatrixXd aligned_leaf_frame(const Eigen::MatrixXd& cols) {
  const int d = static_cast<int>(cols.rows());
  const int k = static_cast<int>(cols.cols());
  if (k == 1) return cols.col(0).normalized();
  if (d != 4 || k != 2) throw ChartError("leaf frames are supported for d = 2 and d = 4 only");
  Eigen::MatrixXd f(4, 2);
  f.col(0) = cols.col(0).normalized();
  Eigen::Vector4d ju = complex_structure4() * f.col(0);
  Eigen::Vector4d p = cols * (cols.transpose() * ju);
  p -= f.col(0) * f.col(0).dot(p);
  if (p.norm() < 0.5)
    throw ChartError("splitting plane is not aligned with the complex structure");
  f.col(1) = p.normalized();
  return f;
}

// The 2-vector (re, im) of a k x k derivative block between aligned frames,
// together with its distance from an exactly conformal block.
Eigen::Vector2d conformal_scalar(const Eigen::MatrixXd& block, double& defect) {
  if (block.rows() == 1) {
    defect = 0.0;
    return {block(0, 0), 0.0};
  }
  defect = std::max(std::abs(block(0, 0) - block(1, 1)), std::abs(block(0, 1) + block(1, 0)));
  return {0.5 * (block(0, 0) + block(1, 1)), 0.5 * (block(1, 0) - block(0, 1))};
}

Eigen::Vector2d cmul(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return {a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]};
}

Eigen::Vector2d complex_coord(const Eigen::VectorXd& v) {
  return v.size() == 1 ? Eigen::Vector2d{v[0], 0.0} : Eigen::Vector2d{v[0], v[1]};
}

double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

// Quadratic and cubic monomials of the domain coordinates; the missing
// constant and linear terms pin h(0) = 0 and Dh(0) = 0 exactly.
int graph_basis_size(int k) { return k == 1 ? 2 : 7; }

Eigen::VectorXd graph_basis(int k, const Eigen::VectorXd& s) {
  Eigen::VectorXd b(graph_basis_size(k));
  if (k == 1) {
    b << s[0] * s[0], s[0] * s[0] * s[0];
  } else {
    const double a = s[0], c = s[1];
    b << a * a, a * c, c * c, a * a * a, a * a * c, a * c * c, c * c * c;
  }
  return b;
}

Eigen::MatrixXd graph_basis_grad(int k, const Eigen::VectorXd& s) {
  Eigen::MatrixXd g(graph_basis_size(k), k);
  if (k == 1) {
    g << 2.0 * s[0], 3.0 * s[0] * s[0];
  } else {
    const double a = s[0], c = s[1];
    g << 2 * a, 0, c, a, 0, 2 * c, 3 * a * a, 0, 2 * a * c, a * a, c * c, 2 * a * c, 0, 3 * c * c;
  }
  return g;
}

std::vector<Eigen::VectorXd> disc_samples(int k, double q) {
  std::vector<Eigen::VectorXd> out;
  if (k == 1) {
    for (int i = 1; i <= 12; ++i)
      for (int sg : {-1, 1}) {
        Eigen::VectorXd s(1);
        s << sg * q * i / 12.0;
        out.push_back(s);
      }
  } else {
    for (int i = 1; i <= 6; ++i)
      for (int a = 0; a < 12; ++a) {
        const double r = q * i / 6.0, t = 2.0 * M_PI * (a + 0.5 * (i % 2)) / 12.0;
        Eigen::VectorXd s(2);
        s << r * std::cos(t), r * std::sin(t);
        out.push_back(s);
      }
  }
  return out;
}

double max_slope_on_disc(int k, const Eigen::MatrixXd& coeff, double q) {
  double worst = 0.0;
  for (const auto& s : disc_samples(k, q)) {
    const Eigen::MatrixXd dh = graph_basis_grad(k, s).transpose() * coeff;  // k x k
    worst = std::max(worst, spectral_norm(dh.transpose()));
  }
  return worst;
}

}  // namespace

LyapunovChart build_chart(const SurfaceModel& model, const WalkWord& omega,
                          const OseledetsFrame& frame, double lambda_plus, double lambda_minus,
                          double eps, int norm_window) {
  const int d = model.cocycle_dim();
  const int k = d / 2;
  if (frame.Eu.rows() != d || frame.Eu.cols() != k || frame.Es.rows() != d ||
      frame.Es.cols() != k)
    throw ChartError("splitting frame does not match the model dimension");
  if (!(eps > 0.0) || norm_window < 1)
    throw ChartError("chart needs eps > 0 and norm_window >= 1");
  if (!(frame.angle > 1e-6)) throw ChartError("splitting angle too small for a chart");

  const Eigen::MatrixXd fu = aligned_leaf_frame(frame.Eu);
  const Eigen::MatrixXd fs = aligned_leaf_frame(frame.Es);
  const double su =
      lyapunov_norm(model, omega, frame.x, fu.col(0), lambda_plus, eps, norm_window);
  const double ss =
      lyapunov_norm(model, omega, frame.x, fs.col(0), lambda_minus, eps, norm_window);

  LyapunovChart c;
  c.x = frame.x;
  c.d_u = k;
  c.eps = eps;
  c.lambda_plus = lambda_plus;
  c.lambda_minus = lambda_minus;
  c.log_su = std::log(su);
  c.log_ss = std::log(ss);
  c.basis.resize(d, d);
  c.basis.leftCols(k) = fu / su;
  c.basis.rightCols(k) = fs / ss;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(c.basis);
  if (!lu.isInvertible()) throw ChartError("chart basis is singular");
  c.inverse = lu.inverse();
  c.radius = std::min(1.0, 1.0 / spectral_norm(c.inverse));
  if (c.radius < 1e-10) throw ChartError("chart radius collapse");
  return c;
}

Eigen::VectorXd chart_coords(const SurfaceModel& model, const LyapunovChart& chart,
                             const Point& y) {
  return chart.inverse * model.displacement(chart.x, y);
}

Point chart_point(const SurfaceModel& model, const LyapunovChart& chart,
                  const Eigen::VectorXd& w) {
  if (w.size() != chart.basis.rows()) throw ChartError("chart coordinate dimension mismatch");
  return model.displace(chart.x, chart.basis * w);
}

ChartStep chart_step(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                     double lambda_plus, double lambda_minus, double eps, int norm_window,
                     int frame_window) {
  ChartStep st;
  const OseledetsFrame f0 = oseledets_splitting(model, omega, x, frame_window, frame_window);
  st.at_x = build_chart(model, omega, f0, lambda_plus, lambda_minus, eps, norm_window);

  const int sym = omega.symbol(0);
  const Point fx = model.apply(sym, x);
  const WalkWord shifted = omega.shifted(1);
  const OseledetsFrame f1 = oseledets_splitting(model, shifted, fx, frame_window, frame_window);
  st.at_fx = build_chart(model, shifted, f1, lambda_plus, lambda_minus, eps, norm_window);

  const TangentMap t = model.tangent(sym, x);
  st.d0 = st.at_fx.inverse * t.matrix * st.at_x.basis;
  const Eigen::VectorXd u1 = st.at_x.basis.col(0) * std::exp(st.at_x.log_su);
  st.theta = std::log((t.matrix * u1).norm());
  st.phi_x = -st.at_x.log_su;
  st.phi_fx = -st.at_fx.log_su;
  st.tau = std::log(st.d0.col(0).norm());

  // Shrink the ball at x until the nonlinear part of the step is an
  // eps-Lipschitz perturbation on it (measured on a fixed direction set; the
  // divided-difference bound doubles the boundary ratio).
  const int d = model.cocycle_dim();
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < d; ++i)
    for (int sg : {-1, 1}) dirs.push_back(sg * Eigen::VectorXd::Unit(d, i));
  dirs.push_back(Eigen::VectorXd::Ones(d) / std::sqrt(double(d)));
  Eigen::VectorXd alt(d);
  for (int i = 0; i < d; ++i) alt[i] = (i % 2 ? -1.0 : 1.0);
  dirs.push_back(alt / std::sqrt(double(d)));

  while (true) {
    double worst = 0.0;
    for (const auto& dir : dirs) {
      const Eigen::VectorXd w = st.at_x.radius * dir;
      const Point y = chart_point(model, st.at_x, w);
      const Eigen::VectorXd fw = chart_coords(model, st.at_fx, model.apply(sym, y));
      worst = std::max(worst, (fw - st.d0 * w).norm() / w.norm());
    }
    st.lip_defect = 2.0 * worst;
    if (st.lip_defect < eps) break;
    st.at_x.radius *= 0.5;
    if (st.at_x.radius < 1e-10) throw ChartError("chart radius collapse");
  }
  return st;
}

LeafGraph local_manifold(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                         char tag, double q, int n_iter, double lambda_plus, double lambda_minus,
                         double eps, int norm_window, int frame_window) {
  if (tag != 's' && tag != 'u') throw ChartError("leaf tag must be 's' or 'u'");
  if (!(q > 0.0) || n_iter < 1) throw ChartError("leaf needs q > 0 and n_iter >= 1");
  const int d = model.cocycle_dim();
  const int k = d / 2;
  const int nb = graph_basis_size(k);

  // Charts along the orbit in the direction whose pullback contracts the
  // graph: forward orbit for stable leaves, backward for unstable ones.
  std::vector<LyapunovChart> charts(n_iter + 1);
  std::vector<int> syms(n_iter);  // generator carrying level l+1 to level l
  for (int l = 0; l <= n_iter; ++l) {
    const int oi = (tag == 's') ? l : -l;
    const WalkWord w = omega.shifted(oi);
    const Point p = orbit_point(model, omega, x, oi);
    charts[l] = build_chart(model, w, oseledets_splitting(model, w, p, frame_window, frame_window),
                            lambda_plus, lambda_minus, eps, norm_window);
    if (l < n_iter) syms[l] = (tag == 's') ? omega.symbol(l) : omega.symbol(-l - 1);
  }
  if (q > charts[0].radius) throw ChartError("graph radius exceeds the chart radius");

  LeafGraph leaf;
  leaf.chart = charts[0];
  leaf.tag = tag;
  leaf.q = q;
  leaf.iterations = n_iter;

  const auto samples = disc_samples(k, q);
  auto run = [&](int depth, bool record) {
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(nb, k);
    for (int l = depth - 1; l >= 0; --l) {
      std::vector<Eigen::VectorXd> doms, vals;
      for (const auto& s : samples) {
        const Eigen::VectorXd h = coeff.transpose() * graph_basis(k, s);
        Eigen::VectorXd w(d);
        if (tag == 's') {
          w.head(k) = h;
          w.tail(k) = s;
        } else {
          w.head(k) = s;
          w.tail(k) = h;
        }
        const Point y = chart_point(model, charts[l + 1], w);
        const Point y2 =
            (tag == 's') ? model.apply_inverse(syms[l], y) : model.apply(syms[l], y);
        const Eigen::VectorXd w2 = chart_coords(model, charts[l], y2);
        const Eigen::VectorXd dom = (tag == 's') ? w2.tail(k) : w2.head(k);
        const Eigen::VectorXd val = (tag == 's') ? w2.head(k) : w2.tail(k);
        if (dom.norm() <= q) {
          doms.push_back(dom);
          vals.push_back(val);
        }
      }
      const int m = static_cast<int>(doms.size());
      if (m < nb + k) throw ChartError("graph transform kept too few samples in the disc");
      Eigen::MatrixXd a(m, nb), rhs(m, k);
      for (int i = 0; i < m; ++i) {
        a.row(i) = graph_basis(k, doms[i]).transpose();
        rhs.row(i) = vals[i].transpose();
      }
      coeff = a.colPivHouseholderQr().solve(rhs);
      const double slope = max_slope_on_disc(k, coeff, q);
      if (record) {
        leaf.slope_trace.push_back(slope);
        leaf.fit_residual = (a * coeff - rhs).norm() / std::sqrt(double(m));
      }
      if (slope > 1.0 / 3.0) coeff *= (1.0 / 3.0) / slope * (1.0 - 1e-12);
    }
    return coeff;
  };

  leaf.coeff = run(n_iter, true);
  const Eigen::MatrixXd check = run(std::max(1, n_iter - 4), false);
  const double scale = std::max(1.0, leaf.coeff.cwiseAbs().maxCoeff());
  leaf.seed_delta = (leaf.coeff - check).cwiseAbs().maxCoeff() / scale;
  leaf.converged = leaf.seed_delta <= 1e-8;
  leaf.max_slope = max_slope_on_disc(k, leaf.coeff, q);
  return leaf;
}

Eigen::VectorXd leaf_graph_value(const LeafGraph& leaf, const Eigen::VectorXd& s) {
  const int k = leaf.chart.d_u;
  if (s.size() != k) throw ChartError("leaf domain dimension mismatch");
  return leaf.coeff.transpose() * graph_basis(k, s);
}

Eigen::MatrixXd leaf_graph_slope(const LeafGraph& leaf, const Eigen::VectorXd& s) {
  const int k = leaf.chart.d_u;
  if (s.size() != k) throw ChartError("leaf domain dimension mismatch");
  return (graph_basis_grad(k, s).transpose() * leaf.coeff).transpose();
}

Point leaf_point(const SurfaceModel& model, const LeafGraph& leaf, const Eigen::VectorXd& s) {
  const int k = leaf.chart.d_u;
  const Eigen::VectorXd h = leaf_graph_value(leaf, s);
  Eigen::VectorXd w(2 * k);
  if (leaf.tag == 's') {
    w.head(k) = h;
    w.tail(k) = s;
  } else {
    w.head(k) = s;
    w.tail(k) = h;
  }
  return chart_point(model, leaf.chart, w);
}

ContractionFit contraction_rate(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                                const Point& y, int n, int direction) {
  if (n < 1 || (direction != 1 && direction != -1))
    throw ChartError("contraction needs n >= 1 and direction +-1");
  ContractionFit fit;
  fit.n = n;
  std::vector<double> dist(n + 1);
  Point a = x, b = y;
  dist[0] = model.distance(a, b);
  if (!(dist[0] > 0.0)) throw ChartError("contraction pair must be distinct");
  for (int j = 1; j <= n; ++j) {
    if (direction > 0) {
      const int sym = omega.symbol(j - 1);
      a = model.apply(sym, a);
      b = model.apply(sym, b);
    } else {
      const int sym = omega.symbol(-j);
      a = model.apply_inverse(sym, a);
      b = model.apply_inverse(sym, b);
    }
    dist[j] = model.distance(a, b);
  }
  fit.d0 = dist[0];
  fit.dn = dist[n];
  fit.rate = std::log(dist[n] / dist[0]) / n;
  for (int j = 0; j <= n; ++j)
    fit.k_const = std::max(fit.k_const, dist[j] / (dist[0] * std::exp(fit.rate * j)));
  return fit;
}

NormalForm normal_form(const SurfaceModel& model, const WalkWord& omega, const LeafGraph& leaf,
                       const Point& y, double lambda_plus, double lambda_minus, double eps,
                       int norm_window, int frame_window, double tol, int max_depth) {
  const char tag = leaf.tag;
  if (!(tol > 0.0) || max_depth < 1) throw ChartError("normal form needs tol > 0, max_depth >= 1");
  const int k = model.cocycle_dim() / 2;

  NormalForm nf;
  nf.y = y;
  nf.tag = tag;
  auto frame_at = [&](const WalkWord& w, const Point& p) {
    const OseledetsFrame f = oseledets_splitting(model, w, p, frame_window, frame_window);
    return aligned_leaf_frame(tag == 'u' ? f.Eu : f.Es);
  };
  nf.orbit.push_back(y);
  nf.frames.push_back(frame_at(omega, y));
  nf.phi = -std::log(lyapunov_norm(model, omega, y, nf.frames[0].col(0),
                                   tag == 'u' ? lambda_plus : lambda_minus, eps, norm_window));

  // Probe points on the fitted leaf around y drive the adaptive depth.
  const Eigen::VectorXd wy = chart_coords(model, leaf.chart, y);
  const Eigen::VectorXd sy = (tag == 's') ? wy.tail(k) : wy.head(k);
  const double room = leaf.q - sy.norm();
  const double h = std::min(1e-3, 0.3 * room);
  if (!(h > 0.0)) throw ChartError("normal-form base point is at the leaf disc edge");
  std::vector<Eigen::VectorXd> deltas;
  if (k == 1) {
    for (double v : {h, -h}) {
      Eigen::VectorXd delta(1);
      delta << v;
      deltas.push_back(delta);
    }
  } else {
    for (auto [a, b] : {std::pair{h, 0.0}, {0.0, h}, {0.6 * h, 0.8 * h}}) {
      Eigen::VectorXd delta(2);
      delta << a, b;
      deltas.push_back(delta);
    }
  }
  std::vector<Point> probes;
  for (const auto& delta : deltas) probes.push_back(leaf_point(model, leaf, sy + delta));

  std::vector<Eigen::Vector2d> prev;
  for (const auto& z : probes)
    prev.push_back(complex_coord(nf.frames[0].transpose() * model.displacement(y, z)));

  Eigen::Vector2d prod{1.0, 0.0};
  for (int depth = 1; depth <= max_depth; ++depth) {
    const int oi = (tag == 'u') ? -depth : depth;
    const int sym = (tag == 'u') ? omega.symbol(-depth) : omega.symbol(depth - 1);
    const Point next = (tag == 'u') ? model.apply_inverse(sym, nf.orbit.back())
                                    : model.apply(sym, nf.orbit.back());
    nf.syms.push_back(sym);
    nf.orbit.push_back(next);
    nf.frames.push_back(frame_at(omega.shifted(oi), next));

    // Scalar of the derivative carrying the new level back toward y.
    const TangentMap t =
        (tag == 'u') ? model.tangent(sym, next) : model.tangent_inverse(sym, next);
    double defect = 0.0;
    const Eigen::Vector2d alpha = conformal_scalar(
        nf.frames[depth - 1].transpose() * t.matrix * nf.frames[depth], defect);
    nf.conformality = std::max(nf.conformality, defect);
    nf.steps.push_back(alpha);
    prod = cmul(prod, alpha);

    double change = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      probes[i] = (tag == 'u') ? model.apply_inverse(sym, probes[i]) : model.apply(sym, probes[i]);
      const Eigen::Vector2d c =
          complex_coord(nf.frames[depth].transpose() * model.displacement(next, probes[i]));
      const Eigen::Vector2d val = cmul(prod, c);
      change = std::max(change, (val - prev[i]).norm() / std::max(val.norm(), 1e-300));
      prev[i] = val;
    }
    nf.depth = depth;
    if (change < tol) {
      nf.converged = true;
      break;
    }
  }
  if (!nf.converged) throw ChartError("normal-form telescoping did not converge");
  return nf;
}

Eigen::Vector2d nf_value(const SurfaceModel& model, const NormalForm& nf, const Point& z) {
  Point zc = z;
  Eigen::Vector2d prod{1.0, 0.0};
  for (int j = 0; j < nf.depth; ++j) {
    zc = (nf.tag == 'u') ? model.apply_inverse(nf.syms[j], zc) : model.apply(nf.syms[j], zc);
    prod = cmul(prod, nf.steps[j]);
  }
  const Eigen::Vector2d c = complex_coord(nf.frames[nf.depth].transpose() *
                                          model.displacement(nf.orbit[nf.depth], zc));
  return cmul(prod, c);
}

double modified_scaling_check(const SurfaceModel& model, const NormalForm& at_x,
                              const NormalForm& at_fx, double tau, const Point& z,
                              const Point& fz) {
  const double hx = nf_value(model, at_x, z).norm();
  const double hf = nf_value(model, at_fx, fz).norm();
  if (hx == 0.0 && hf == 0.0) return 0.0;
  const double lhs = std::exp(-at_fx.phi) * hf;
  const double rhs = std::exp(tau) * std::exp(-at_x.phi) * hx;
  return std::abs(lhs - rhs) / std::max(std::exp(-at_x.phi) * hx, 1e-300);
}

void write_leaf_csv(std::ostream& os, const SurfaceModel& model, const LeafGraph& leaf,
                    int n_samples) {
  if (n_samples < 2) throw ChartError("leaf dump needs at least 2 samples");
  const int k = leaf.chart.d_u;
  const int na = (model.cocycle_dim() == 2) ? 3 : 4;
  os << "arclen,s";
  for (int i = 0; i < na; ++i) os << ",y" << i;
  os << "\n";
  double arclen = 0.0;
  Point prev;
  for (int i = 0; i < n_samples; ++i) {
    const double s = -leaf.q + 2.0 * leaf.q * i / (n_samples - 1);
    Eigen::VectorXd sv = Eigen::VectorXd::Zero(k);
    sv[0] = s;
    const Point p = leaf_point(model, leaf, sv);
    if (i > 0) arclen += model.distance(prev, p);
    prev = p;
    os << arclen << "," << s;
    for (int a = 0; a < na; ++a) {
      const double t = (a < 3 && p.inv[a]) ? 1.0 / p.x[a] : p.x[a];
      os << "," << t;
    }
    os << "\n";
  }
}

}  // namespace rsd
