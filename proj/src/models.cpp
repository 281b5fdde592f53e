#include "rsd/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rsd {

int SurfaceModel::auto_index(const std::string& name) const {
  for (int i = 0; i < n_autos(); ++i)
    if (auto_name(i) == name) return i;
  throw ModelError("unknown automorphism name: " + name);
}

// ---------------------------------------------------------------- torus

namespace {

std::int64_t det3i(const IMat& m, int r0, int r1, int r2, int c0, int c1, int c2) {
  return m(r0, c0) * (m(r1, c1) * m(r2, c2) - m(r1, c2) * m(r2, c1)) -
         m(r0, c1) * (m(r1, c0) * m(r2, c2) - m(r1, c2) * m(r2, c0)) +
         m(r0, c2) * (m(r1, c0) * m(r2, c1) - m(r1, c1) * m(r2, c0));
}

std::int64_t det4i(const IMat& m) {
  std::int64_t d = 0;
  int sign = 1;
  for (int c = 0; c < 4; ++c) {
    int cols[3], k = 0;
    for (int cc = 0; cc < 4; ++cc)
      if (cc != c) cols[k++] = cc;
    d += sign * m(0, c) * det3i(m, 1, 2, 3, cols[0], cols[1], cols[2]);
    sign = -sign;
  }
  return d;
}

IMat adjugate4i(const IMat& m) {
  IMat adj(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      int rows[3], cols[3], a = 0, b = 0;
      for (int r = 0; r < 4; ++r)
        if (r != j) rows[a++] = r;
      for (int c = 0; c < 4; ++c)
        if (c != i) cols[b++] = c;
      const std::int64_t minor = det3i(m, rows[0], rows[1], rows[2], cols[0], cols[1], cols[2]);
      adj(i, j) = (((i + j) % 2) ? -minor : minor);
    }
  }
  return adj;
}

double wrap01(double v) {
  double w = v - std::floor(v);
  if (w >= 1.0) w -= 1.0;  // guard against floor rounding at the boundary
  return w;
}

constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

}  // namespace

void TorusModel::add_generator(const std::string& name, const IMat& m4) {
  if (m4.rows() != 4 || m4.cols() != 4) throw ModelError("torus generator must be 4x4");
  const std::int64_t det = det4i(m4);
  if (det != 1 && det != -1) throw ModelError("torus generator must have determinant +-1");
  IMat inv = adjugate4i(m4);
  if (det == -1) inv = (-inv).eval();
  gens_.push_back(Generator{name, m4, inv, static_cast<int>(det)});
}

void TorusModel::add_generator_complex(const std::string& name, const Eigen::Matrix2i& mc) {
  // (Re z1, Im z1, Re z2, Im z2): a real 2x2 matrix over C acts blockwise.
  IMat m = IMat::Zero(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      m(2 * i, 2 * j) = mc(i, j);
      m(2 * i + 1, 2 * j + 1) = mc(i, j);
    }
  add_generator(name, m);
}

Point TorusModel::apply(int id, const Point& p) const {
  const Generator& g = gens_.at(id);
  Point q;
  for (int i = 0; i < 4; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) acc += static_cast<double>(g.m(i, j)) * p.x[j];
    q.x[i] = wrap01(acc);
  }
  return q;
}

Point TorusModel::apply_inverse(int id, const Point& p) const {
  const Generator& g = gens_.at(id);
  Point q;
  for (int i = 0; i < 4; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) acc += static_cast<double>(g.minv(i, j)) * p.x[j];
    q.x[i] = wrap01(acc);
  }
  return q;
}

TangentMap TorusModel::tangent(int id, const Point& p) const {
  TangentMap t;
  t.matrix = gens_.at(id).m.cast<double>();
  t.base = p;
  t.image = apply(id, p);
  return t;
}

TangentMap TorusModel::tangent_inverse(int id, const Point& p) const {
  TangentMap t;
  t.matrix = gens_.at(id).minv.cast<double>();
  t.base = p;
  t.image = apply_inverse(id, p);
  return t;
}

bool TorusModel::on_model(const Point& p, double) const {
  for (int i = 0; i < 4; ++i)
    if (!(p.x[i] >= 0.0 && p.x[i] < 1.0)) return false;
  return true;
}

double TorusModel::distance(const Point& a, const Point& b) const {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double d = std::abs(a.x[i] - b.x[i]);
    d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

Point TorusModel::random_point(MixStream& rs) const {
  Point p;
  for (int i = 0; i < 4; ++i) p.x[i] = rs.next_double();
  return p;
}

Eigen::VectorXd TorusModel::displacement(const Point& from, const Point& to) const {
  Eigen::VectorXd v(4);
  for (int i = 0; i < 4; ++i) {
    double d = to.x[i] - from.x[i];
    v[i] = d - std::round(d);  // representative in [-1/2, 1/2)
  }
  return v;
}

Point TorusModel::displace(const Point& from, const Eigen::VectorXd& v) const {
  if (v.size() != 4) throw ModelError("torus displacement vectors have 4 components");
  Point p = from;
  for (int i = 0; i < 4; ++i) p.x[i] = wrap01(from.x[i] + v[i]);
  return p;
}

IMat TorusModel::cohomology_matrix(int id) const {
  const Generator& g = gens_.at(id);
  if (g.det != 1)
    throw ModelError("torus cohomology action defined for determinant +1 generators");
  // Pullback on H^1 is M^T; on H^2 it is the wedge square, entries = 2x2 minors.
  IMat a = g.m.transpose();
  IMat w(6, 6);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) {
      const int i = kPairs[r][0], j = kPairs[r][1];
      const int k = kPairs[c][0], l = kPairs[c][1];
      w(r, c) = a(i, k) * a(j, l) - a(i, l) * a(j, k);
    }
  return w;
}

IMat TorusModel::cohomology_gram() const {
  IMat g = IMat::Zero(6, 6);
  g(0, 5) = g(5, 0) = 1;   // e01 ^ e23
  g(1, 4) = g(4, 1) = -1;  // e02 ^ e13
  g(2, 3) = g(3, 2) = 1;   // e03 ^ e12
  return g;
}

// ---------------------------------------------------------------- wehler

WehlerModel::WehlerModel(const std::array<std::array<std::array<double, 3>, 3>, 3>& coeffs,
                         double sample_box)
    : c_(coeffs), sample_box_(sample_box) {}

WehlerModel WehlerModel::markov(double k) {
  std::array<std::array<std::array<double, 3>, 3>, 3> c{};
  c[2][0][0] = 1.0;
  c[0][2][0] = 1.0;
  c[0][0][2] = 1.0;
  c[1][1][1] = -1.0;
  c[0][0][0] = -k;
  return WehlerModel(c, 2.0);
}

void WehlerModel::add_generator(const std::string& name, std::vector<int> word) {
  for (int i : word)
    if (i < 0 || i > 2) throw ModelError("wehler generator word entries must be 0..2");
  if (word.empty()) throw ModelError("wehler generator word must be nonempty");
  gens_.push_back(Generator{name, std::move(word)});
}

std::array<std::array<std::array<double, 3>, 3>, 3> WehlerModel::charted(
    const std::array<bool, 3>& inv) const {
  std::array<std::array<std::array<double, 3>, 3>, 3> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const int ii = inv[0] ? 2 - i : i;
        const int jj = inv[1] ? 2 - j : j;
        const int kk = inv[2] ? 2 - k : k;
        out[i][j][k] = c_[ii][jj][kk];
      }
  return out;
}

namespace {

void other_axes(int axis, int& o1, int& o2) {
  o1 = (axis + 1) % 3;
  o2 = (axis + 2) % 3;
}

// Collapse a charted tensor to a quadratic in one axis at fixed other values.
// u, v are the values of the axes (axis+1)%3 and (axis+2)%3.
void collapse(const std::array<std::array<std::array<double, 3>, 3>, 3>& c, int axis, double u,
              double v, double& q2, double& q1, double& q0) {
  int o1, o2;
  other_axes(axis, o1, o2);
  const double pu[3] = {1.0, u, u * u};
  const double pv[3] = {1.0, v, v * v};
  q2 = q1 = q0 = 0.0;
  int e[3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double w = pu[a] * pv[b];
      e[o1] = a;
      e[o2] = b;
      e[axis] = 2;
      q2 += c[e[0]][e[1]][e[2]] * w;
      e[axis] = 1;
      q1 += c[e[0]][e[1]][e[2]] * w;
      e[axis] = 0;
      q0 += c[e[0]][e[1]][e[2]] * w;
    }
}

}  // namespace

void WehlerModel::axis_quadratic(int axis, const Point& p, double& q2, double& q1,
                                 double& q0) const {
  const auto cc = charted(p.inv);
  int o1, o2;
  other_axes(axis, o1, o2);
  collapse(cc, axis, p.x[o1], p.x[o2], q2, q1, q0);
}

double WehlerModel::form_value(const Point& p) const {
  double q2, q1, q0;
  axis_quadratic(0, p, q2, q1, q0);
  const double t = p.x[0];
  return (q2 * t + q1) * t + q0;
}

Eigen::Vector3d WehlerModel::form_gradient(const Point& p) const {
  Eigen::Vector3d g;
  for (int axis = 0; axis < 3; ++axis) {
    double q2, q1, q0;
    axis_quadratic(axis, p, q2, q1, q0);
    g[axis] = 2.0 * q2 * p.x[axis] + q1;
  }
  return g;
}

Eigen::Matrix<double, 3, 2> WehlerModel::tangent_frame(const Point& p) const {
  Eigen::Vector3d n = form_gradient(p);
  const double nn = n.norm();
  if (nn < 1e-14) throw ModelError("wehler: singular surface point (vanishing gradient)");
  n /= nn;
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(n[i]) < std::abs(n[k])) k = i;
  Eigen::Vector3d t1 = Eigen::Vector3d::Unit(k) - n[k] * n;
  t1.normalize();
  Eigen::Vector3d t2 = n.cross(t1);
  Eigen::Matrix<double, 3, 2> frame;
  frame.col(0) = t1;
  frame.col(1) = t2;
  return frame;
}

Point WehlerModel::involution_frozen(int axis, const Point& p) const {
  double q2, q1, q0;
  axis_quadratic(axis, p, q2, q1, q0);
  if (std::abs(q2) < 1e-12 && std::abs(q1) < 1e-12)
    throw ModelError("wehler: degenerate fiber");
  Point q = p;
  const double t = p.x[axis];
  // Smooth sum-form extension off the surface; branch selection and chart
  // flips happen only in involution().
  q.x[axis] = -q1 / q2 - t;
  return q;
}

namespace {

// Conjugate root of q2 t^2 + q1 t + q0 through the root t, reported either in
// the same chart (flip = false) or as its reciprocal (flip = true), whichever
// has magnitude <= 1. Product form is used away from cancellation.
void conjugate_root(double q2, double q1, double q0, double t, double& val, bool& flip) {
  if (std::abs(q2) < 1e-12 && std::abs(q1) < 1e-12)
    throw ModelError("wehler: degenerate fiber");
  double tp;
  if (std::abs(q2 * t) > std::abs(q2))
    tp = q0 / (q2 * t);
  else
    tp = -q1 / q2 - t;

  // Reciprocals of the roots solve the reversed quadratic q0 s^2 + q1 s + q2.
  double sp;
  const double s = 1.0 / t;
  if (std::abs(q0 * s) > std::abs(q0))
    sp = q2 / (q0 * s);
  else
    sp = -q1 / q0 - s;

  if (std::isfinite(tp) && std::abs(tp) <= 1.0) {
    val = tp;
    flip = false;
  } else if (std::isfinite(sp) && std::abs(sp) <= 1.0) {
    val = sp;
    flip = true;
  } else if (std::isfinite(tp)) {
    val = tp;
    flip = false;
  } else if (std::isfinite(sp)) {
    val = sp;
    flip = true;
  } else {
    throw ModelError("wehler: involution produced no finite representation");
  }
}

}  // namespace

Point WehlerModel::involution(int axis, const Point& p) const {
  double q2, q1, q0;
  axis_quadratic(axis, p, q2, q1, q0);
  double val;
  bool flip;
  conjugate_root(q2, q1, q0, p.x[axis], val, flip);

  Point q = p;
  q.x[axis] = val;
  if (flip) q.inv[axis] = !q.inv[axis];

  // One Newton step on the active-axis quadratic in the output chart.
  double a2 = q2, a1 = q1, a0 = q0;
  if (flip) std::swap(a2, a0);
  const double v = q.x[axis];
  const double deriv = 2.0 * a2 * v + a1;
  if (std::abs(deriv) > 1e-12) q.x[axis] -= ((a2 * v + a1) * v + a0) / deriv;
  return q;
}

Eigen::Matrix3d WehlerModel::ambient_jacobian(int axis, const Point& p) const {
  // Derivative of the sum-form extension t' = -q1/q2 - t in stored
  // coordinates, including the chart flip the full involution would take.
  double q2, q1, q0;
  axis_quadratic(axis, p, q2, q1, q0);
  if (std::abs(q2) < 1e-12 && std::abs(q1) < 1e-12)
    throw ModelError("wehler: degenerate fiber");
  int o1, o2;
  other_axes(axis, o1, o2);

  // Partial derivatives of q2, q1, q0 with respect to the other two axes.
  const auto cc = charted(p.inv);
  auto coef = [&](int da, int db, int pow_axis) {
    // coefficient lookup: exponent pow_axis on `axis`, da on o1, db on o2
    int e[3];
    e[axis] = pow_axis;
    e[o1] = da;
    e[o2] = db;
    return cc[e[0]][e[1]][e[2]];
  };
  const double u = p.x[o1], v = p.x[o2];
  double pu[3] = {1.0, u, u * u}, dpu[3] = {0.0, 1.0, 2.0 * u};
  double pv[3] = {1.0, v, v * v}, dpv[3] = {0.0, 1.0, 2.0 * v};
  double dq2_du = 0, dq1_du = 0, dq0_du = 0, dq2_dv = 0, dq1_dv = 0, dq0_dv = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      dq2_du += coef(a, b, 2) * dpu[a] * pv[b];
      dq1_du += coef(a, b, 1) * dpu[a] * pv[b];
      dq0_du += coef(a, b, 0) * dpu[a] * pv[b];
      dq2_dv += coef(a, b, 2) * pu[a] * dpv[b];
      dq1_dv += coef(a, b, 1) * pu[a] * dpv[b];
      dq0_dv += coef(a, b, 0) * pu[a] * dpv[b];
    }

  const double t = p.x[axis];
  Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
  // d(-q1/q2)/du = -(dq1 q2 - q1 dq2)/q2^2
  const double inv_q22 = 1.0 / (q2 * q2);
  jac(axis, axis) = -1.0;
  jac(axis, o1) = -(dq1_du * q2 - q1 * dq2_du) * inv_q22;
  jac(axis, o2) = -(dq1_dv * q2 - q1 * dq2_dv) * inv_q22;

  // Follow the chart decision of involution(): if the output is stored in the
  // flipped chart, compose with s' = 1/t'.
  double val;
  bool flip;
  conjugate_root(q2, q1, q0, t, val, flip);
  if (flip) {
    const double tpe = -q1 / q2 - t;  // sum-form value used for the chain rule
    jac.row(axis) *= -1.0 / (tpe * tpe);
  }
  return jac;
}

namespace {

Point apply_word(const WehlerModel& m, const std::vector<int>& word, Point p, bool inverse) {
  // Words compose right to left; involutions are their own inverses, so the
  // inverse word is the reverse.
  if (!inverse) {
    for (auto it = word.rbegin(); it != word.rend(); ++it) p = m.involution(*it, p);
  } else {
    for (int a : word) p = m.involution(a, p);
  }
  return p;
}

}  // namespace

Point WehlerModel::apply(int id, const Point& p) const {
  return apply_word(*this, gens_.at(id).word, p, false);
}

Point WehlerModel::apply_inverse(int id, const Point& p) const {
  return apply_word(*this, gens_.at(id).word, p, true);
}

TangentMap WehlerModel::word_tangent(const std::vector<int>& word, const Point& p) const {
  TangentMap t;
  t.base = p;
  Eigen::Matrix3d total = Eigen::Matrix3d::Identity();
  Point cur = p;
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    total = (ambient_jacobian(*it, cur) * total).eval();
    cur = involution(*it, cur);
  }
  t.image = cur;
  const auto b_in = tangent_frame(p);
  const auto b_out = tangent_frame(cur);
  t.matrix = b_out.transpose() * total * b_in;
  return t;
}

TangentMap WehlerModel::tangent(int id, const Point& p) const {
  return word_tangent(gens_.at(id).word, p);
}

TangentMap WehlerModel::tangent_inverse(int id, const Point& p) const {
  std::vector<int> rev(gens_.at(id).word);
  std::reverse(rev.begin(), rev.end());
  return word_tangent(rev, p);
}

bool WehlerModel::on_model(const Point& p, double tol) const {
  return std::abs(form_value(p)) < tol;
}

double WehlerModel::distance(const Point& a, const Point& b) const {
  // Chordal metric per P^1 factor, computed from homogeneous pairs so it is
  // chart-independent.
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double a0 = a.inv[i] ? 1.0 : a.x[i], a1 = a.inv[i] ? a.x[i] : 1.0;
    const double b0 = b.inv[i] ? 1.0 : b.x[i], b1 = b.inv[i] ? b.x[i] : 1.0;
    const double num = std::abs(a0 * b1 - a1 * b0);
    const double den = std::sqrt((a0 * a0 + a1 * a1) * (b0 * b0 + b1 * b1));
    const double d = num / den;
    s += d * d;
  }
  return std::sqrt(s);
}

Point WehlerModel::random_point(MixStream& rs) const {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = rs.next_in(-sample_box_, sample_box_);
    const double y = rs.next_in(-sample_box_, sample_box_);
    // Solve the quadratic in the third coordinate.
    std::array<std::array<std::array<double, 3>, 3>, 3> cc = c_;
    double q2 = 0, q1 = 0, q0 = 0;
    double px[3] = {1.0, x, x * x}, py[3] = {1.0, y, y * y};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        q2 += cc[a][b][2] * px[a] * py[b];
        q1 += cc[a][b][1] * px[a] * py[b];
        q0 += cc[a][b][0] * px[a] * py[b];
      }
    if (std::abs(q2) < 1e-12) continue;
    const double disc = q1 * q1 - 4.0 * q2 * q0;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    const double z = (rs.next_double() < 0.5) ? (-q1 + sq) / (2.0 * q2) : (-q1 - sq) / (2.0 * q2);
    if (!std::isfinite(z) || std::abs(z) > sample_box_) continue;
    Point p;
    const double vals[3] = {x, y, z};
    for (int i = 0; i < 3; ++i) {
      if (std::abs(vals[i]) <= 1.0) {
        p.x[i] = vals[i];
        p.inv[i] = false;
      } else {
        p.x[i] = 1.0 / vals[i];
        p.inv[i] = true;
      }
    }
    if (on_model(p, 1e-7)) return p;
  }
  throw ModelError("wehler: failed to sample a surface point");
}

Eigen::VectorXd WehlerModel::displacement(const Point& from, const Point& to) const {
  // Coordinates of `to` transferred into the stored charts of `from`, minus
  // `from`, projected on the tangent frame at `from`.
  Eigen::Vector3d w;
  for (int i = 0; i < 3; ++i) {
    double s;
    if (to.inv[i] == from.inv[i]) {
      s = to.x[i];
    } else {
      if (std::abs(to.x[i]) < 1e-300) throw ModelError("wehler: displacement across a chart pole");
      s = 1.0 / to.x[i];
    }
    w[i] = s - from.x[i];
  }
  const Eigen::Matrix<double, 3, 2> frame = tangent_frame(from);
  return frame.transpose() * w;
}

Point WehlerModel::displace(const Point& from, const Eigen::VectorXd& v) const {
  if (v.size() != 2) throw ModelError("wehler displacement vectors have 2 components");
  const Eigen::Matrix<double, 3, 2> frame = tangent_frame(from);
  Point p = from;  // Newton lift runs in the charts of `from`
  p.x.head<3>() += frame * v;
  for (int it = 0; it < 25; ++it) {
    const double f = form_value(p);
    if (std::abs(f) < 1e-13) break;
    const Eigen::Vector3d g = form_gradient(p);
    const double g2 = g.squaredNorm();
    if (g2 < 1e-20) throw ModelError("wehler: singular point while lifting a displacement");
    p.x.head<3>() -= (f / g2) * g;
  }
  if (!(std::abs(form_value(p)) < 1e-9))
    throw ModelError("wehler: displacement lift did not reach the surface");
  Point out;
  for (int i = 0; i < 3; ++i) {
    const double t = p.inv[i] ? 1.0 / p.x[i] : p.x[i];
    if (!std::isfinite(t)) throw ModelError("wehler: displacement lift crossed a chart pole");
    if (std::abs(t) <= 1.0) {
      out.x[i] = t;
      out.inv[i] = false;
    } else {
      out.x[i] = 1.0 / t;
      out.inv[i] = true;
    }
  }
  return out;
}

IMat WehlerModel::cohomology_matrix(int id) const {
  // Pullback of one involution on Z h1 + Z h2 + Z h3: sigma_i* sends h_i to
  // -h_i + 2 h_j + 2 h_k and fixes the other two classes. Involutions are
  // self-inverse, so a word's pullback is the product in word order.
  auto basic = [](int i) {
    IMat m = IMat::Identity(3, 3);
    m(i, i) = -1;
    for (int j = 0; j < 3; ++j)
      if (j != i) m(j, i) = 2;
    return m;
  };
  IMat total = IMat::Identity(3, 3);
  // (f o g)* = g* f*; with word a1 a2 ... an meaning a1 o a2 o ... o an the
  // pullback is M(an) ... M(a1) reversed: total = M(a1) M(a2) ... M(an) acts
  // as the pullback of the composition applied left to right.
  for (int a : gens_.at(id).word) total = (total * basic(a)).eval();
  return total;
}

IMat WehlerModel::cohomology_gram() const {
  IMat g(3, 3);
  g << 0, 2, 2, 2, 0, 2, 2, 2, 0;
  return g;
}

// ---------------------------------------------------------------- model files

namespace {

using nlohmann::json;

std::unique_ptr<SurfaceModel> torus_from_json(const json& j) {
  auto model = std::make_unique<TorusModel>();
  for (const auto& g : j.at("generators")) {
    const std::string name = g.at("name").get<std::string>();
    if (g.contains("complex")) {
      Eigen::Matrix2i mc;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) mc(r, c) = g.at("complex").at(r).at(c).get<int>();
      model->add_generator_complex(name, mc);
    } else {
      IMat m(4, 4);
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = g.at("matrix").at(r).at(c).get<std::int64_t>();
      model->add_generator(name, m);
    }
  }
  return model;
}

std::unique_ptr<SurfaceModel> wehler_from_json(const json& j) {
  std::unique_ptr<WehlerModel> model;
  if (j.contains("markov_k")) {
    model = std::make_unique<WehlerModel>(WehlerModel::markov(j.at("markov_k").get<double>()));
  } else {
    std::array<std::array<std::array<double, 3>, 3>, 3> c{};
    for (const auto& e : j.at("coefficients")) {
      const auto& m = e.at("monomial");
      c.at(m.at(0).get<int>()).at(m.at(1).get<int>()).at(m.at(2).get<int>()) =
          e.at("value").get<double>();
    }
    model = std::make_unique<WehlerModel>(c, j.value("sample_box", 2.0));
  }
  for (const auto& g : j.at("generators")) {
    std::vector<int> word;
    for (const auto& w : g.at("word")) word.push_back(w.get<int>() - 1);  // 1-based in files
    model->add_generator(g.at("name").get<std::string>(), std::move(word));
  }
  return model;
}

}  // namespace

std::unique_ptr<SurfaceModel> load_model_json_text(const std::string& text) {
  const json j = json::parse(text);
  const std::string type = j.at("type").get<std::string>();
  if (type == "torus") return torus_from_json(j);
  if (type == "wehler") return wehler_from_json(j);
  throw ModelError("unknown model type: " + type);
}

std::unique_ptr<SurfaceModel> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model_json_text(ss.str());
}

}  // namespace rsd
