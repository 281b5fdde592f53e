#include "rsd/suspension.hpp"

#include <cmath>
#include <ostream>

namespace rsd {

namespace {

// boundary snap for roof budgets; see time_changed_flow in the header
constexpr double kSnap = 1e-13;
constexpr int kMaxCrossings = 1 << 20;

void check_fiber(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw FlowError("fiber coordinate must lie in [0,1)");
}

double positive_roof(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                     const RoofConfig& rc) {
  const double tau = roof(model, omega, x, rc).tau;
  if (!(tau > 0.0)) throw FlowError("roof must be positive along the orbit");
  return tau;
}

}  // namespace

RoofData roof(const SurfaceModel& model, const WalkWord& omega, const Point& x,
              const RoofConfig& rc) {
  const ChartStep st = chart_step(model, omega, x, rc.lambda_plus, rc.lambda_minus, rc.eps,
                                  rc.norm_window, rc.frame_window);
  RoofData r;
  r.tau = st.tau;
  r.theta = st.theta;
  r.phi = st.phi_x;
  r.phi_fx = st.phi_fx;
  r.radius = st.at_x.radius;
  return r;
}

double roof_partial_sum(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                        std::int64_t p, const RoofConfig& rc) {
  double acc = 0.0;
  if (p >= 0) {
    Point cur = x;
    for (std::int64_t j = 0; j < p; ++j) {
      acc += roof(model, omega.shifted(j), cur, rc).tau;
      cur = compose(model, omega.shifted(j), 1, cur);
    }
  } else {
    Point cur = x;
    for (std::int64_t j = -1; j >= p; --j) {
      cur = compose(model, omega.shifted(j + 1), -1, cur);
      acc -= roof(model, omega.shifted(j), cur, rc).tau;
    }
  }
  return acc;
}

SuspensionPoint standard_flow(const SurfaceModel& model, const SuspensionPoint& z, double t) {
  check_fiber(z.k);
  if (!std::isfinite(t)) throw FlowError("flow time must be finite");
  const double s = z.k + t;
  const double fl = std::floor(s);
  const std::int64_t n = static_cast<std::int64_t>(fl);
  SuspensionPoint out{compose(model, z.omega, n, z.x), z.omega.shifted(n), s - fl};
  if (out.k >= 1.0) {  // s just below an integer rounds up; boundary -> new cell
    out.x = compose(model, out.omega, 1, out.x);
    out.omega = out.omega.shifted(1);
    out.k = 0.0;
  }
  if (out.k < 0.0) out.k = 0.0;
  return out;
}

SuspensionPoint time_changed_flow(const SurfaceModel& model, const SuspensionPoint& z, double ell,
                                  const RoofConfig& rc) {
  check_fiber(z.k);
  if (!std::isfinite(ell)) throw FlowError("flow budget must be finite");
  SuspensionPoint cur = z;
  int crossings = 0;
  if (ell >= 0.0) {
    double budget = ell;
    while (true) {
      const double tau = positive_roof(model, cur.omega, cur.x, rc);
      const double remain = (1.0 - cur.k) * tau;
      if (budget < remain - kSnap) {
        cur.k += budget / tau;
        if (cur.k >= 1.0) cur.k = std::nextafter(1.0, 0.0);
        break;
      }
      budget -= remain;
      cur.x = compose(model, cur.omega, 1, cur.x);
      cur.omega = cur.omega.shifted(1);
      cur.k = 0.0;
      if (budget <= kSnap) break;
      if (++crossings > kMaxCrossings) throw FlowError("flow budget crosses too many cells");
    }
  } else {
    double need = -ell;
    while (true) {
      const double tau = positive_roof(model, cur.omega, cur.x, rc);
      const double have = cur.k * tau;
      if (need <= have + kSnap) {
        cur.k -= need / tau;
        if (cur.k < 0.0) cur.k = 0.0;
        if (cur.k >= 1.0) cur.k = std::nextafter(1.0, 0.0);
        break;
      }
      need -= have;
      if (need <= kSnap) {  // stopped on this cell's left edge
        cur.k = 0.0;
        break;
      }
      cur.x = compose(model, cur.omega, -1, cur.x);
      cur.omega = cur.omega.shifted(-1);
      cur.k = 1.0;  // transient: right edge of the previous cell
      if (++crossings > kMaxCrossings) throw FlowError("flow budget crosses too many cells");
    }
  }
  return cur;
}

double tc_normalizer(const SurfaceModel& model, const FiniteMeasure& mu, const RoofConfig& rc,
                     int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw FlowError("normalizer needs at least one sample");
  MixStream rs(seed);
  double acc = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const WalkWord w(mu, seed + 1 + static_cast<std::uint64_t>(i));
    const Point x = model.random_point(rs);
    acc += roof(model, w, x, rc).tau;
  }
  const double mean = acc / n_samples;
  if (!(mean > 0.0)) throw FlowError("pilot roof mean must be positive");
  return 1.0 / mean;
}

double tc_density(const SurfaceModel& model, const SuspensionPoint& z, const RoofConfig& rc,
                  double c_tau) {
  if (!(c_tau > 0.0)) throw FlowError("density normalizer must be positive");
  check_fiber(z.k);
  return c_tau * roof(model, z.omega, z.x, rc).tau;
}

std::vector<BirkhoffRow> birkhoff_diagnostic(const SurfaceModel& model, const SuspensionPoint& z,
                                             const std::function<bool(const Point&)>& in_set,
                                             const std::vector<double>& t_list, double ens_avg) {
  check_fiber(z.k);
  std::vector<BirkhoffRow> rows;
  rows.reserve(t_list.size());
  for (double t : t_list) {
    if (!(t > 0.0)) throw FlowError("diagnostic horizons must be positive");
    double acc = 0.0;
    double remaining = t;
    Point x = z.x;
    WalkWord w = z.omega;
    double span = std::min(remaining, 1.0 - z.k);  // partial first cell
    while (true) {
      if (in_set(x)) acc += span;
      remaining -= span;
      if (remaining <= 0.0) break;
      x = compose(model, w, 1, x);
      w = w.shifted(1);
      span = std::min(remaining, 1.0);
    }
    BirkhoffRow row;
    row.t_len = t;
    row.time_avg = acc / t;
    row.ens_avg = ens_avg;
    row.gap = std::abs(row.time_avg - ens_avg);
    rows.push_back(row);
  }
  return rows;
}

void write_birkhoff_csv(std::ostream& os, std::uint64_t seed,
                        const std::vector<BirkhoffRow>& rows) {
  os << "seed,T,time_avg,ens_avg,gap\n";
  for (const BirkhoffRow& r : rows)
    os << seed << "," << r.t_len << "," << r.time_avg << "," << r.ens_avg << "," << r.gap << "\n";
}

}  // namespace rsd
