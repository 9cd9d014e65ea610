#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "decomposition.hpp"
#include "io.hpp"
#include "objective_sensitive.hpp"
#include "randfield.hpp"
#include "reservoir.hpp"
#include "types.hpp"

namespace ospca {

/// Everything the experiment stages share, assembled once from a config:
/// datasets, the reference decomposition, the synthetic truth and trial
/// point, the calibrated reservoir case, and both gradient probes.
struct PipelineContext {
  ExperimentConfig config;
  SampleMatrix train;
  SampleMatrix test;
  SpectralBasis base;   // Euclidean reference fit of the training set
  int n_selected = 0;   // N: smallest n with energy_fraction >= pca.threshold

  ReservoirCase reservoir;  // observations = rates simulated at mu_star
  Vector mu_star;           // synthetic truth: test sample truncated to 2N
  Vector eta;               // trial point: test sample truncated to N
  double objective_at_eta = 0.0;

  GradientProbe probe_central;      // finite-difference gradient at eta
  GradientProbe probe_directional;  // points-at-the-truth gradient at eta

  const GradientProbe& probe(GradientKind kind) const {
    return kind == GradientKind::kCentral ? probe_central : probe_directional;
  }
};

/// Builds the shared pipeline state. Throws with a stage-tagged message
/// (train-data, test-data, fit, select, case, truth, probe-central,
/// probe-directional) when a step fails.
PipelineContext build_pipeline(const ExperimentConfig& config);

// --- score tables -----------------------------------------------------

struct TrainScoreRow {
  std::string algorithm;  // pca | gspca | agspca | egspca
  int n1 = 0;
  double energy = 0.0;                     // spectral fraction captured
  double mean_sq_field_residual = 0.0;     // <|r_s|^2> over training samples
  double mean_sq_gradient_residual = 0.0;  // <(J^T r_s)^2>, linearized objective
};

struct TestScoreRow {
  std::string gradient;   // central | directional
  std::string algorithm;  // pca | gspca | agspca | egspca
  int n1 = 0;
  double field_residual_norm = 0.0;      // |mu_star - truncation|
  double objective_residual_norm = 0.0;  // simulated C(truncation)
};

struct GradientMeta {
  double epsilon = 0.0;
  double norm = 0.0;  // |J|
  int guarded_pairs = 0;
  bool extension_fallback = false;  // any tail selection fell back to sigma order
};

struct ReportMeta {
  std::uint64_t seed = 0;
  int n_selected = 0;
  std::vector<int> n1_values;
  double eps_scaled = 0.0;
  double gradient_cosine = 0.0;
  double objective_at_trial = 0.0;
  GradientMeta central;
  GradientMeta directional;
};

/// One extension selection, reported per gradient kind and per n1 > N.
struct ExtensionReport {
  std::string gradient;
  int n1 = 0;
  std::vector<int> indices;  // zero-based reference component indices
  bool sigma_order_fallback = false;
};

struct ScoreReport {
  ReportMeta meta;
  std::vector<TrainScoreRow> train_rows;  // config's gradient kind only
  std::vector<TestScoreRow> test_rows;    // both gradient kinds
  std::vector<ExtensionReport> extensions;
};

/// Batched truncation quality over a sample set: projects every column of
/// samples onto the first n1 components (under the basis's metric) and
/// averages the squared Euclidean residual and the squared gradient-direction
/// residual (gradient^T r)^2.
std::pair<double, double> truncation_stats(const SpectralBasis& basis, int n1, const Matrix& samples,
                                           const Vector& gradient);

/// Computes both score tables and the run metadata. All reported numbers are
/// checked finite and nonnegative (cosine excepted: it may be negative).
ScoreReport run_scores(const PipelineContext& ctx);

// --- subspace descent ---------------------------------------------------

struct DescentResult {
  Vector coefficients;      // final subspace coefficients
  Vector field;             // reconstruction at the final coefficients
  double objective_value = 0.0;
  int steps_taken = 0;
  bool diverged = false;            // five consecutive objective increases
  std::vector<double> history;      // objective value, start + one per step
};

/// Fixed-rate gradient descent restricted to the span of the first n
/// components: the gradient in coefficient space is estimated by central
/// finite differences (step delta * sqrt(sigma_i) per coordinate) and each
/// update is a -= rate * gradient (rate is a learning rate, not a step
/// length). Stops early at a stationary point or after five consecutive
/// objective increases (flagged diverged).
DescentResult subspace_descent(const ObjectiveFn& objective_fn, const SpectralBasis& basis, int n,
                               const Vector& start, int steps, double rate, double delta);

// --- pipeline stages (write artifacts under config.out_dir) -----------------

void run_generate(const ExperimentConfig& config);
void run_pca(const ExperimentConfig& config);
void run_gspca(const ExperimentConfig& config);
void run_agspca(const ExperimentConfig& config);
void run_egspca(const ExperimentConfig& config);
void run_simulate(const ExperimentConfig& config);
void run_gradient(const ExperimentConfig& config);
ScoreReport run_train_scores(const ExperimentConfig& config);
ScoreReport run_test_scores(const ExperimentConfig& config);
DescentResult run_descend(const ExperimentConfig& config);

/// Serializes a full report (meta + both tables + extensions) as JSON.
std::string report_to_json(const ScoreReport& report);

}  // namespace ospca
