#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rsd/models.hpp"
#include "rsd/walk.hpp"

namespace rsd {

// Any schema, range, or model-construction problem in user-supplied
// configuration. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One generator entry: exactly one of the three payloads is set.
struct GeneratorSpec {
  std::string name;
  Eigen::Matrix2i complex2 = Eigen::Matrix2i::Zero();  // torus, complex 2x2
  IMat matrix4;                                        // torus, real 4x4
  std::vector<int> word;                               // wehler involution word
  enum class Kind { complex2, matrix4, word } kind = Kind::complex2;
};

struct ExperimentConfig {
  std::string model;  // "torus" | "wehler"
  double markov = 2.0;
  std::vector<GeneratorSpec> generators;
  std::vector<double> weights;  // empty -> uniform
  std::uint64_t seed = 1;
  int n_steps = 20000;
  int burn_in = 1000;
  int grid = 128;
  std::vector<double> scales = {0.25, 0.125, 0.0625, 0.03125};
  int n_base = 400;
  std::vector<std::string> stages = {"all"};
  double lambda_ref = 0.0;  // reference top exponent; 0 = none
  double chart_eps = 0.1;
  int norm_window = 0;   // 0 -> model default (10 torus, 14 wehler)
  int frame_window = 0;  // 0 -> model default (32 torus, 48 wehler)
  std::string source_text;  // raw config bytes, hashed into the manifest
};

// Strict JSON schema: unknown keys, missing fields, and out-of-range values
// all throw ConfigError.
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

std::unique_ptr<SurfaceModel> make_model(const ExperimentConfig& cfg);
FiniteMeasure make_measure(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Pair-projected histograms of one post-burn-in orbit. stationarity_tv is
// the worst total-variation distance between the histogram and the
// weight-averaged generator pushforward of the same samples; mc_threshold is
// the Monte-Carlo noise scale it is judged against.
struct MeasureHistogram {
  int grid = 0;
  std::vector<std::pair<int, int>> pairs;  // projected coordinate pairs
  std::vector<Eigen::MatrixXd> counts;     // grid x grid, one per pair
  std::int64_t total = 0;
  double stationarity_tv = 0.0;
  double mc_threshold = 0.0;
  int escapes = 0;  // wehler pole skips; the run restarts and continues
};
MeasureHistogram run_measure_histogram(const SurfaceModel& model, const FiniteMeasure& mu,
                                       const ExperimentConfig& cfg);
void write_histogram_csv(std::ostream& os, const MeasureHistogram& h);

// Heuristic classification bands around the theorem's three alternatives;
// overridable from config.
struct DimensionBands {
  double atomic_max = 0.1;
  double curve_lo = 0.8, curve_hi = 1.2;
  double volume_lo = 3.7, volume_hi = 4.3;
};

// Local mass-scaling estimate: mean ball mass over sampled base points per
// scale, with d_hat the log-log slope. The label is an empirical match, not
// a proof of any alternative.
struct DimensionEstimate {
  std::vector<double> scales;
  std::vector<double> mean_mass;
  std::vector<double> per_base;  // per-base-point fitted slopes
  double d_hat = 0.0;
  std::string label;  // "finitely-supported" | "curve-supported" | "volume-like" | "unclassified"
};
// theiler is the half-width of the temporal exclusion window: samples within
// that index distance of the base point are left out of its ball counts, so
// short-range orbit correlation cannot masquerade as low dimension.
DimensionEstimate local_dimension_estimate(const std::vector<Eigen::Vector4d>& samples,
                                           const std::vector<double>& scales, int n_base,
                                           std::uint64_t seed, int theiler = 20,
                                           const DimensionBands& bands = {});

// Deterministic sample clouds on the 4-torus for exercising the estimator:
// "finite-orbit" (rational orbit of the hyperbolic pair), "lebesgue"
// (equidistributing orbit), "circle" (arc-length samples of an invariant
// circle).
std::vector<Eigen::Vector4d> dimension_fixture(const std::string& name, int n, std::uint64_t seed);

struct StageResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ReportBundle {
  std::vector<StageResult> stages;
  bool all_passed = true;
  std::string config_hash;
  std::string manifest;               // manifest JSON text
  std::vector<std::string> outputs;   // files written under out_dir
};

// Runs the configured stages and, when out_dir is nonempty, writes
// report.jsonl, histogram.csv, summary.txt, and manifest.json with content
// hashes. Identical config and seed reproduce identical bytes.
ReportBundle run_full_report(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace rsd
