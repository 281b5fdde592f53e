#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rsd/models.hpp"
#include "rsd/walk.hpp"

namespace rsd {

struct DegenerateSplitting : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exponent estimate from QR re-orthonormalization along one sampled word.
struct ExponentEstimate {
  std::vector<double> exponents;  // sorted descending
  std::vector<double> stderrs;    // batch-means standard errors, same order
  double lambda_plus = 0;         // exponents.front()
  double lambda_minus = 0;        // exponents.back()
  double det_rate = 0;            // per-step mean of log|det Df|, independently computed
  int n = 0;                      // averaged steps (after burn-in)
  bool converged = false;  // last-quarter drift below 10 stderr (plus a 1e-8 floor)
};

// Runs the walk drawn from (mu, seed) for n steps starting at x0 and
// accumulates the QR cocycle of the full derivative blocks. A burn-in of
// min(100, n/10) steps is excluded from all averages.
ExponentEstimate lyapunov_exponents(const SurfaceModel& model, const FiniteMeasure& mu,
                                    const Point& x0, std::uint64_t seed, int n);

// Orthonormal frames of the most-expanded plane pushed in from the past (Eu)
// and of its backward-cocycle analogue pushed back from the future (Es).
struct OseledetsFrame {
  Point x;
  Eigen::MatrixXd Eu, Es;  // d x d/2, orthonormal columns
  double lambda_plus = 0;  // window estimates from the two sweeps
  double lambda_minus = 0;
  double angle = 0;         // smallest principal angle between the spans
  double equivariance = 0;  // d_Gr(Df Eu, Eu recomputed at the image)
  int n_used = 0;
};

// Throws DegenerateSplitting when the two spans come within 1e-8 in angle.
OseledetsFrame oseledets_splitting(const SurfaceModel& model, const WalkWord& omega,
                                   const Point& x, int n_fwd, int n_bwd);

// Operator-norm distance between orthogonal projections onto the column
// spans: the sine of the largest principal angle. Frames must be orthonormal.
double grassmann_distance(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);
// Smallest principal angle between the spans, in (0, pi/2].
double principal_angle(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);

// Two-sided truncated adapted norm
//   ( sum_{|n|<=N} |Df_w^n v|^2 exp(-2 lambda_b n - 2 eps0 |n|) )^{1/2},
// accumulated in the log domain. N = 0 returns |v| exactly; the result never
// drops below |v|. The contracted side of the sum is computed against a
// growing condition number e^{(lambda_plus - lambda_minus)|n|}, so windows
// beyond roughly 36/(lambda_plus - lambda_minus) lose it to rounding.
double lyapunov_norm(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                     const Eigen::VectorXd& v, double lambda_b, double eps0, int N);

// Default adapted-norm slack: min(1, lp/200, -lm/200)/10. Requires lp > 0 > lm.
double default_eps0(double lambda_plus, double lambda_minus);

// Smallest constant L making the window hyperbolicity bounds hold at (x, w):
// stable and unstable growth sandwiches with slack eps0/2 over n in [-N, N],
// and the angle bound angle(F^n) > e^{-|n| eps0}/L.
struct NuhReport {
  double L_hat = 1;
  double L_stable = 1;    // smallest L for the stable sandwich alone
  double L_unstable = 1;  // unstable sandwich
  double L_angle = 1;     // angle bound
  double min_angle = 0;
  std::vector<double> angles;  // angle at F^n, n = -N..N
  int N = 0;
  double eps0 = 0;
};

NuhReport nuh_estimate(const SurfaceModel& model, const WalkWord& omega, const Point& x, int N,
                       double eps0, double lambda_plus, double lambda_minus, int frame_window);

// Damped orbit maximum of one-point window constants,
//   L(F^k) = max_{|j| <= J} C(F^{k+j}) e^{-eps0 |j|},
// returned for k = -K..K (index k + K). C(y) combines the two growth
// sandwiches over [-N, N] with the reciprocal splitting angle at y. By the
// triangle inequality in |j| this sequence obeys L(F^k) <= L(x) e^{eps0 |k|}
// except where a fresh maximum enters at the shift-range edge.
std::vector<double> nuh_orbit_constants(const SurfaceModel& model, const WalkWord& omega,
                                        const Point& x, int K, int J, int N, double eps0,
                                        double lambda_plus, double lambda_minus, int frame_window);

// Base point of F^n(x, w) for signed n (surface coordinate of the skew orbit).
Point orbit_point(const SurfaceModel& model, const WalkWord& omega, const Point& x, int n);

// A base point with an orthonormal frame spanning an estimated subspace.
struct SubspaceSample {
  Point x;
  Eigen::MatrixXd frame;
};

// Subspace distance with saturation: 1 when the base distance is at least
// rho0/4, otherwise the Grassmann distance of the frames compared in stored
// coordinates (the transport is the identity on the flat torus; surface
// frames are compared through their per-point orthonormal bases).
double subspace_distance(const SurfaceModel& model, const SubspaceSample& a,
                         const SubspaceSample& b, double rho0);

// Window test of the block inequalities at x along the forward word:
// |Df^n v| <= C e^{an} |v| for v in span(stable_frame) and
// |Df^n v| >= C^{-1} e^{bn} |v| on the orthogonal complement, 0 <= n <= N.
bool pesin_block_member(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                        const Eigen::MatrixXd& stable_frame, double a, double b, double C, int N);

struct HolderFit {
  double alpha_hat = 0;
  double L_hat = 0;
  double alpha_se = 0;   // regression standard error of the slope
  double alpha_ref = 0;  // (a - b)/(a - d), d = ln(2C^2) + 2c + |ln(rho0/4)| + |a|
  bool at_least_ref = false;  // alpha_hat + 2 alpha_se >= alpha_ref
  int n_pairs = 0;
  bool constrained = false;  // false when every usable pair has zero distance
};

// Log-log regression of subspace distance against base distance over all
// sample pairs below the saturation radius. Requires at least 30 such pairs.
HolderFit holder_diagnostic(const SurfaceModel& model, const std::vector<SubspaceSample>& samples,
                            double a, double b, double block_C, double growth_C, double growth_c,
                            double rho0);

}  // namespace rsd
