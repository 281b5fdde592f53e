#pragma once
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "rsd/charts.hpp"
#include "rsd/walk.hpp"

namespace rsd {

struct FlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point of the suspension Y x [0,1): a surface point, the driving word, and
// the fiber coordinate k. Cell crossings shift the word by the same count
// that compose() applies, so the symbol bookkeeping is exactly invertible.
struct SuspensionPoint {
  Point x;
  WalkWord omega;
  double k = 0.0;  // in [0,1)
};

// Chart configuration shared by every roof evaluation: pilot exponents,
// slack, and the two estimation windows. The same values must be used for
// every roof call of one experiment or the roof stops being a single
// deterministic function.
struct RoofConfig {
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  double eps = 0.1;
  int norm_window = 10;
  int frame_window = 32;
};

// Roof value over one cell. tau = theta - phi_fx + phi holds to rounding by
// construction of the chart step; phi_fx is carried along so the identity is
// checkable without building the image chart twice.
struct RoofData {
  double tau = 0.0;    // one-step expansion in adapted coordinates
  double theta = 0.0;  // ambient log-derivative norm on the unstable line
  double phi = 0.0;    // coboundary at the base point
  double phi_fx = 0.0;  // coboundary at the image point
  double radius = 0.0;  // chart radius at the base; small values flag near-tangency
};

RoofData roof(const SurfaceModel& model, const WalkWord& omega, const Point& x,
              const RoofConfig& rc);

// Signed roof sums: sum over cells 0..p-1 for p >= 0 and minus the sum over
// cells p..-1 for p < 0, so that sum(p+q) = sum(p) + sum(q) o F^p.
double roof_partial_sum(const SurfaceModel& model, const WalkWord& omega, const Point& x,
                        std::int64_t p, const RoofConfig& rc);

// Unit-speed suspension flow: k advances at speed one, crossing floor(k + t)
// cells; a landing exactly on a cell boundary belongs to the entered cell.
SuspensionPoint standard_flow(const SurfaceModel& model, const SuspensionPoint& z, double t);

// Suspension flow over the roof: each cell takes time tau(cell), and k is the
// fraction of the current cell's roof already elapsed. Budgets that land
// within 1e-13 of a boundary are snapped onto it, which keeps integer-valued
// examples exact and perturbs elapsed time far below the 1e-9 flow-law
// tolerance. Throws FlowError if a roof evaluation is not positive.
SuspensionPoint time_changed_flow(const SurfaceModel& model, const SuspensionPoint& z, double ell,
                                  const RoofConfig& rc);

// Normalizer C = 1 / (mean roof) over a pilot ensemble of n_samples
// independent word/point pairs drawn from seed.
double tc_normalizer(const SurfaceModel& model, const FiniteMeasure& mu, const RoofConfig& rc,
                     int n_samples, std::uint64_t seed);

// Invariant density C * tau(x, omega) of the time-changed flow relative to
// the product of the base measure with dt.
double tc_density(const SurfaceModel& model, const SuspensionPoint& z, const RoofConfig& rc,
                  double c_tau);

// One diagnostic row: time average of an indicator along the flow up to
// t_len against its ensemble average.
struct BirkhoffRow {
  double t_len = 0.0;
  double time_avg = 0.0;
  double ens_avg = 0.0;
  double gap = 0.0;
};

// Time averages of in_set along the standard flow started at z, one row per
// horizon. The surface point is constant within a cell, so each integral is
// a finite sum, exact up to the addition order.
std::vector<BirkhoffRow> birkhoff_diagnostic(const SurfaceModel& model, const SuspensionPoint& z,
                                             const std::function<bool(const Point&)>& in_set,
                                             const std::vector<double>& t_list, double ens_avg);

// CSV dump with columns seed,T,time_avg,ens_avg,gap.
void write_birkhoff_csv(std::ostream& os, std::uint64_t seed, const std::vector<BirkhoffRow>& rows);

}  // namespace rsd
