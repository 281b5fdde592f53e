#include "rsd/cohomology.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "rsd/rng.hpp"

namespace rsd {
namespace {

// Dominant eigendirection of a real matrix with a simple dominant eigenvalue.
Eigen::VectorXd dominant_eigvec(const IMat& m) {
  const Eigen::MatrixXd md = m.cast<double>();
  Eigen::EigenSolver<Eigen::MatrixXd> es(md);
  int best = 0;
  for (int i = 1; i < md.rows(); ++i)
    if (std::abs(es.eigenvalues()[i]) > std::abs(es.eigenvalues()[best])) best = i;
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  return v / v.norm();
}

}  // namespace

void LatticeAction::validate() const {
  IntLattice lat{gram};
  lat.validate();
  const auto sig = lat.signature();
  if (sig[0] != 1 || sig[1] != rank() - 1)
    throw std::invalid_argument("lattice action requires signature (1, n-1)");
  for (const IMat& m : generators) {
    if (m.rows() != rank() || m.cols() != rank())
      throw std::invalid_argument("generator shape mismatch");
    if (m.transpose() * gram * m != gram)
      throw std::invalid_argument("generator is not an exact isometry");
  }
  if (!names.empty() && names.size() != generators.size())
    throw std::invalid_argument("names must be empty or parallel to generators");
  if (kappa0.size() != rank()) throw std::invalid_argument("kappa0 size mismatch");
  if (mass_exact(kappa0) <= 0) throw std::invalid_argument("kappa0 must have positive square");
}

double LatticeAction::pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  return a.dot(gram.cast<double>() * b);
}

double LatticeAction::mass(const Eigen::VectorXd& a) const {
  return pair(a, kappa0.cast<double>());
}

std::int64_t LatticeAction::mass_exact(const IVec& a) const {
  IntLattice lat{gram};
  return lat.pair(a, kappa0);
}

ClassifyResult classify_isometry(const IMat& m, const IMat& gram) {
  if (m.transpose() * gram * m != gram)
    throw std::invalid_argument("classify_isometry: not an exact isometry of the gram");
  ClassifyResult res;
  res.cls = classify_integer_matrix(m);
  res.rho = spectral_radius(m);
  return res;
}

double projective_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0 || nv == 0) throw std::invalid_argument("projective_distance: zero vector");
  const double c = std::min(1.0, std::abs(u.dot(v)) / (nu * nv));
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

namespace {

// One mass-normalized pullback pass over the first n symbols; returns false
// if the mass degenerates.
bool pullback(const LatticeAction& action, const WalkWord& omega, int n, Eigen::VectorXd& v) {
  for (int j = n - 1; j >= 0; --j) {
    const int g = omega.symbol(j);
    v = action.generators[static_cast<std::size_t>(g)].cast<double>() * v;
    const double m = action.mass(v);
    if (!std::isfinite(m) || std::abs(m) < 1e-280) return false;
    v /= m;
  }
  return true;
}

}  // namespace

FurstenbergResult furstenberg_vector(const LatticeAction& action, const WalkWord& omega,
                                     const Eigen::VectorXd& a, int n, double cauchy_tol) {
  if (n < 1) throw std::invalid_argument("furstenberg_vector: n must be >= 1");
  if (a.size() != action.rank()) throw std::invalid_argument("furstenberg_vector: size mismatch");
  if (omega.n_atoms() > static_cast<int>(action.generators.size()))
    throw std::invalid_argument("furstenberg_vector: walk has more symbols than generators");
  const double a2 = action.pair(a, a);
  if (a2 <= 0) throw std::invalid_argument("furstenberg_vector: seed class needs <a|a> > 0");

  FurstenbergResult res;
  Eigen::VectorXd full = a, half = a;
  const bool ok_full = pullback(action, omega, n, full);
  const bool ok_half = pullback(action, omega, n / 2, half);
  if (!ok_full || !ok_half) {
    res.vec = full;
    res.converged = false;
    return res;
  }
  res.vec = full;
  res.cauchy_defect = n >= 2 ? projective_distance(full, half) : 1.0;
  res.converged = res.cauchy_defect < cauchy_tol;
  res.isotropy = action.pair(full, full) / full.squaredNorm();
  res.nef_proxy = action.mass(full) > 0 && res.isotropy >= -1e-6;
  return res;
}

BoundarySampleResult boundary_measure_sample(const LatticeAction& action, const FiniteMeasure& mu,
                                             int n_samples, int n_iter, std::uint64_t seed) {
  if (n_samples < 1 || n_iter < 1)
    throw std::invalid_argument("boundary_measure_sample: positive counts required");
  // Atom index i drives generators[i]; the walk's symbols index the measure's
  // atom list, so the two orderings must agree.
  if (mu.atoms.size() > action.generators.size())
    throw std::invalid_argument("boundary_measure_sample: more atoms than generators");
  if (!action.names.empty())
    for (std::size_t i = 0; i < mu.atoms.size(); ++i)
      if (mu.atoms[i] != action.names[i])
        throw std::invalid_argument("boundary_measure_sample: atom name mismatch at index " +
                                    std::to_string(i));

  BoundarySampleResult res;

  // Elementary-pair criterion: fewer than two loxodromic generators (among
  // the measure's support) with non-proportional dominant eigendirections.
  std::vector<Eigen::VectorXd> axes;
  for (std::size_t atom = 0; atom < mu.atoms.size(); ++atom) {
    const IMat& m = action.generators[atom];
    if (classify_integer_matrix(m) != IsometryClass::loxodromic) continue;
    const Eigen::VectorXd axis = dominant_eigvec(m);
    bool fresh = true;
    for (const Eigen::VectorXd& seen : axes) fresh = fresh && projective_distance(axis, seen) > 1e-6;
    if (fresh) axes.push_back(axis);
  }
  res.elementary = axes.size() < 2;

  const Eigen::VectorXd a = action.kappa0.cast<double>();
  int nef_count = 0;
  for (int s = 0; s < n_samples; ++s) {
    const WalkWord omega(mu, mix64(seed, static_cast<std::uint64_t>(s)));
    const FurstenbergResult fr = furstenberg_vector(action, omega, a, n_iter, 1e-6);
    if (!fr.converged) {
      ++res.n_failed;
      continue;
    }
    res.samples.push_back({fr.vec, fr.nef_proxy});
    if (fr.nef_proxy) ++nef_count;
  }
  if (!res.samples.empty()) {
    int best = 0;
    for (std::size_t i = 0; i < res.samples.size(); ++i) {
      int close = 0;
      for (std::size_t j = 0; j < res.samples.size(); ++j)
        if (projective_distance(res.samples[i].vec, res.samples[j].vec) < 1e-3) ++close;
      best = std::max(best, close);
    }
    res.max_cluster_mass = static_cast<double>(best) / static_cast<double>(res.samples.size());
    res.nef_fraction = static_cast<double>(nef_count) / static_cast<double>(res.samples.size());
  }
  return res;
}

}  // namespace rsd
