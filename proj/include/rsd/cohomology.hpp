#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsd/lattice.hpp"
#include "rsd/walk.hpp"

namespace rsd {

// Integral isometry action on a lattice of signature (1, n-1), with a fixed
// positive class kappa0 as the mass gauge M(a) = <a|kappa0>.
struct LatticeAction {
  IMat gram;
  std::vector<IMat> generators;
  std::vector<std::string> names;  // optional, parallel to generators
  IVec kappa0;

  int rank() const { return static_cast<int>(gram.rows()); }
  // Symmetry, signature (1, n-1), exact M^T G M = G per generator,
  // <kappa0|kappa0> > 0; throws std::invalid_argument.
  void validate() const;

  double pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  double mass(const Eigen::VectorXd& a) const;
  std::int64_t mass_exact(const IVec& a) const;
};

// Projective point normalized to mass 1; nef_proxy is the positive-cone
// membership proxy (<v|v> >= -tol, mass > 0), not a geometric nef test.
struct ProjectiveClass {
  Eigen::VectorXd vec;
  bool nef_proxy = false;
};

struct ClassifyResult {
  IsometryClass cls = IsometryClass::undecided;
  double rho = 0;  // floating spectral radius, informational
};
// Exact trichotomy (power test, no float threshold); pre: M^T G M = G.
ClassifyResult classify_isometry(const IMat& m, const IMat& gram);

// sin of the angle between the lines through u and v.
double projective_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct FurstenbergResult {
  Eigen::VectorXd vec;        // mass-normalized pullback limit candidate
  bool converged = false;     // dyadic Cauchy test in projective distance
  double cauchy_defect = 0;   // d(v_n, v_{n/2})
  double isotropy = 0;        // <v|v>/|v|^2, signed
  bool nef_proxy = false;
};
// Mass-normalized pullback M_{w0} M_{w1} ... M_{w(n-1)} a along the word.
FurstenbergResult furstenberg_vector(const LatticeAction& action, const WalkWord& omega,
                                     const Eigen::VectorXd& a, int n,
                                     double cauchy_tol = 1e-8);

struct BoundarySampleResult {
  std::vector<ProjectiveClass> samples;  // converged samples only
  int n_failed = 0;                      // non-converged sample count
  double max_cluster_mass = 0;           // largest mass in a 1e-3 projective ball
  bool elementary = true;  // < 2 loxodromic generators with distinct dominant directions
  double nef_fraction = 0;
};
// i.i.d. samples of the Furstenberg vector over random words; mu weights the
// generator set.
BoundarySampleResult boundary_measure_sample(const LatticeAction& action, const FiniteMeasure& mu,
                                             int n_samples, int n_iter, std::uint64_t seed);

}  // namespace rsd
