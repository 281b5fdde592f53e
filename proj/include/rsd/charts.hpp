#pragma once
#include <Eigen/Dense>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "rsd/cocycle.hpp"
#include "rsd/models.hpp"
#include "rsd/walk.hpp"

namespace rsd {

struct ChartError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adapted chart at a point: basis columns are the unstable then stable frame
// vectors divided by their adapted-norm scalings, so in the coordinates
// w = inverse * displacement(x, .) the splitting lands on the leading and
// trailing axes and one dynamics step is an e^{lambda +- eps} sandwich on
// each block. phi = -log_su is the log chart-to-ambient scaling on the
// unstable line; roof functions are built from it.
struct LyapunovChart {
  Point x;
  int d_u = 0;              // leading (unstable) axis count
  Eigen::MatrixXd basis;    // d x d, derivative of chart^{-1} at the origin
  Eigen::MatrixXd inverse;  // d x d, derivative of the chart at the origin
  double radius = 0;        // chart ball radius, in (0, 1]
  double eps = 0;           // weight slack of the adapted norms
  double lambda_plus = 0, lambda_minus = 0;
  double log_su = 0;  // log adapted scaling on the unstable frame vector
  double log_ss = 0;  // log adapted scaling on the stable frame vector
};

// Builds the chart from an estimated splitting with angle > 1e-6. The
// adapted norms use the given exponents and slack over a window of
// norm_window steps each way; the window also bounds how far frame-estimation
// error is amplified, so keep norm_window well below
// 36/(lambda_plus - lambda_minus). Throws ChartError when the radius
// collapses below 1e-10 or the second unstable vector cannot be aligned with
// the complex structure.
LyapunovChart build_chart(const SurfaceModel& model, const WalkWord& omega,
                          const OseledetsFrame& frame, double lambda_plus, double lambda_minus,
                          double eps, int norm_window);

Eigen::VectorXd chart_coords(const SurfaceModel& model, const LyapunovChart& chart, const Point& y);
Point chart_point(const SurfaceModel& model, const LyapunovChart& chart, const Eigen::VectorXd& w);

// One dynamics step seen through the charts at x and at F(x, omega), with the
// roof data tied to it. tau is defined as the log norm of the first unstable
// column of d0, which makes tau = theta - phi(F x) + phi(x) an identity of
// the computed quantities; theta is the ambient log expansion along the
// chart's unstable vector. The chart radius at x is halved until the
// nonlinear part of the step stays eps-Lipschitz on the ball.
struct ChartStep {
  LyapunovChart at_x, at_fx;
  Eigen::MatrixXd d0;  // chart-to-chart derivative at the origin
  double theta = 0;
  double tau = 0;
  double phi_x = 0, phi_fx = 0;
  double lip_defect = 0;  // measured Lip(f~ - D0 f~) on the final ball
};

ChartStep chart_step(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                     double lambda_plus, double lambda_minus, double eps, int norm_window,
                     int frame_window);

// Local invariant manifold as a graph over one splitting block of the chart
// at the base point: value = coeff^T times the quadratic and cubic monomials
// of the domain coordinates (the linear part vanishes by construction, so
// h(0) = 0 and Dh(0) = 0 hold exactly). The graph transform seeds the zero
// graph n_iter steps along the orbit (backward for tag 's', forward pulls it
// back; symmetrically for tag 'u') and re-fits after each step, projecting
// the coefficients back whenever the slope bound 1/3 is exceeded.
struct LeafGraph {
  LyapunovChart chart;
  char tag = 's';  // 's': graph over the trailing block; 'u': over the leading
  double q = 0;    // domain disc radius in chart coordinates
  Eigen::MatrixXd coeff;  // n_basis x k, k = d/2
  double max_slope = 0;   // final max |Dh| over the disc (after any cap)
  double fit_residual = 0;
  std::vector<double> slope_trace;  // pre-cap slope at each transform step
  int iterations = 0;
  bool converged = false;  // insensitive to extending the seeding depth
  double seed_delta = 0;   // coefficient change when the depth is shortened by 4
};

LeafGraph local_manifold(const SurfaceModel& model, const WalkWord& omega, const Point& x, char tag,
                         double q, int n_iter, double lambda_plus, double lambda_minus, double eps,
                         int norm_window, int frame_window);

// Graph value h(s), slope Dh(s), and the surface point over domain
// coordinates s (k components, |s| <= q).
Eigen::VectorXd leaf_graph_value(const LeafGraph& leaf, const Eigen::VectorXd& s);
Eigen::MatrixXd leaf_graph_slope(const LeafGraph& leaf, const Eigen::VectorXd& s);
Point leaf_point(const SurfaceModel& model, const LeafGraph& leaf, const Eigen::VectorXd& s);

// Distance contraction along a pair of forward (direction +1) or backward
// (direction -1) orbits: rate = log(d_n / d_0) / n and the smallest constant
// k with d_j <= k d_0 e^{rate j} over the whole stretch.
struct ContractionFit {
  double rate = 0;
  double k_const = 1;
  double d0 = 0, dn = 0;
  int n = 0;
};
ContractionFit contraction_rate(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                                const Point& y, int n, int direction);

// Linearizing coordinate on a one-dimensional (real or complex) invariant
// leaf through y: the limit of leaf coordinates of the contracted orbit of z,
// pushed back through the one-step leaf derivatives. Convergence is declared
// when one more step changes the probe values by less than tol in relative
// terms; the reached depth is stored and reused by nf_value. phi is the log
// adapted scaling of the leaf direction at y, so e^{-phi} H is the
// modified coordinate whose one-step growth is exactly the chart roof.
struct NormalForm {
  Point y;
  char tag = 'u';
  int depth = 0;
  bool converged = false;
  double phi = 0;
  double conformality = 0;  // worst non-conformal defect of the step blocks
  std::vector<Point> orbit;             // y, then depth steps into the contracting past
  std::vector<int> syms;                // generator ids used for those steps
  std::vector<Eigen::MatrixXd> frames;  // d x k aligned leaf frames along the orbit
  std::vector<Eigen::Vector2d> steps;   // complex scalars of Df between frames
};

// The probe points driving the adaptive depth are taken on the fitted leaf
// graph near y (tangent-line probes would drift off a curved leaf under the
// contracting iteration), so y must lie inside the interior of the leaf disc.
NormalForm normal_form(const SurfaceModel& model, const WalkWord& omega, const LeafGraph& leaf,
                       const Point& y, double lambda_plus, double lambda_minus, double eps,
                       int norm_window, int frame_window, double tol, int max_depth);

// H(z) as a complex number (real part, imaginary part); the imaginary part
// is zero when the leaf is a real line (k = 1).
Eigen::Vector2d nf_value(const SurfaceModel& model, const NormalForm& nf, const Point& z);

// Relative defect of |e^{-phi'} H'(f z)| = e^{tau} |e^{-phi} H(z)| for normal
// forms at consecutive points of one orbit; fz must be the image of z.
double modified_scaling_check(const SurfaceModel& model, const NormalForm& at_x,
                              const NormalForm& at_fx, double tau, const Point& z, const Point& fz);

// Leaf sampled along its first domain axis, as CSV rows of cumulative
// arc length, the domain parameter, and the ambient coordinates (projective
// charts are unfolded to affine values on the surface model).
void write_leaf_csv(std::ostream& os, const SurfaceModel& model, const LeafGraph& leaf,
                    int n_samples);

}  // namespace rsd
