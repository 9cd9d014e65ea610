#include "harness.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string_view>
#include <utility>

namespace ospca {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

/// Re-throws with a stage tag so pipeline failures say where they happened.
template <typename F>
void with_stage(const char* stage, F&& body) {
  try {
    body();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(stage) + ": " + e.what());
  } catch (const IOError& e) {
    throw IOError(std::string(stage) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(stage) + ": " + e.what());
  }
}

SampleMatrix stage_train_data(const ExperimentConfig& config) {
  SampleMatrix samples;
  with_stage("train-data", [&] {
    samples = config.train_data.empty()
                  ? make_dataset(config.train_count, config.train, config.kmin, config.kmax)
                  : load_dataset_csv(config.train_data);
  });
  return samples;
}

SampleMatrix stage_test_data(const ExperimentConfig& config) {
  SampleMatrix samples;
  with_stage("test-data", [&] {
    samples = config.test_data.empty()
                  ? make_dataset(config.test_count, config.test, config.kmin, config.kmax)
                  : load_dataset_csv(config.test_data);
    if (config.test_index < 0 || config.test_index >= samples.count())
      throw ValidationError("test.index out of range [0, " + std::to_string(samples.count() - 1) + "]");
  });
  return samples;
}

ReservoirCase stage_case(const ExperimentConfig& config, const GridShape& grid) {
  ReservoirCase rc;
  with_stage("case", [&] {
    rc = make_five_spot_case(grid.nx, grid.ny, config.case_dx, config.case_dy, config.case_dz, config.viscosity,
                             config.injector_bhp, config.producer_bhp, config.well_radius);
  });
  return rc;
}

/// ceil(factor * n) with a tiny backoff so factors that hit an integer
/// exactly (up to parse rounding) do not get bumped one past it.
int scaled_dimension(double factor, int n) { return static_cast<int>(std::ceil(factor * n - 1e-9)); }

std::vector<int> n1_values(const ExperimentConfig& config, int n_selected, int rank) {
  std::vector<int> values;
  for (double factor : config.n1_factors) {
    const int n1 = scaled_dimension(factor, n_selected);
    if (n1 > rank)
      throw ValidationError("n1.factors: n1 = " + std::to_string(n1) + " exceeds basis rank " + std::to_string(rank));
    values.push_back(n1);
  }
  return values;
}

const char* kind_name(GradientKind kind) { return kind == GradientKind::kCentral ? "central" : "directional"; }

/// Per-gradient-kind fits shared by the score tables and the artifact files.
struct KindFits {
  SpectralBasis gs;
  SpectralBasis ags;
  PerturbationCorrection correction;
  std::vector<std::pair<int, SpectralBasis>> extensions;  // (n1, extended basis), n1 > N only
  std::vector<ExtensionReport> reports;
};

struct ExperimentFits {
  KindFits central;
  KindFits directional;

  const KindFits& of(GradientKind kind) const { return kind == GradientKind::kCentral ? central : directional; }
};

KindFits fit_kind(const PipelineContext& ctx, GradientKind kind) {
  const GradientProbe& probe = ctx.probe(kind);
  KindFits fits;
  with_stage(kind == GradientKind::kCentral ? "fit-central" : "fit-directional", [&] {
    fits.gs = gspca_fit(ctx.train, probe.gradient, probe.epsilon);
    std::tie(fits.ags, fits.correction) = agspca_fit(ctx.base, probe);
    for (int n1 : n1_values(ctx.config, ctx.n_selected, ctx.base.rank())) {
      if (n1 <= ctx.n_selected) continue;
      fits.extensions.emplace_back(n1, egspca_extend(ctx.base, probe, ctx.n_selected, n1 - ctx.n_selected));
      const ExtensionSelection selection = egspca_select(probe, ctx.n_selected, n1 - ctx.n_selected);
      fits.reports.push_back(ExtensionReport{kind_name(kind), n1, selection.indices, selection.sigma_order_fallback});
    }
  });
  return fits;
}

ExperimentFits compute_fits(const PipelineContext& ctx) {
  return ExperimentFits{fit_kind(ctx, GradientKind::kCentral), fit_kind(ctx, GradientKind::kDirectional)};
}

const SpectralBasis* extension_for(const KindFits& fits, int n1) {
  for (const auto& [value, basis] : fits.extensions)
    if (value == n1) return &basis;
  return nullptr;
}

void check_finite_nonneg(double value, const char* what) {
  if (!std::isfinite(value) || value < 0.0)
    throw NumericalError(std::string("report: ") + what + " is not finite/nonnegative");
}

void validate_report(const ScoreReport& report) {
  for (const TrainScoreRow& row : report.train_rows) {
    check_finite_nonneg(row.energy, "train energy");
    check_finite_nonneg(row.mean_sq_field_residual, "train field residual");
    check_finite_nonneg(row.mean_sq_gradient_residual, "train gradient residual");
  }
  for (const TestScoreRow& row : report.test_rows) {
    check_finite_nonneg(row.field_residual_norm, "test field residual");
    check_finite_nonneg(row.objective_residual_norm, "test objective residual");
  }
  if (!std::isfinite(report.meta.gradient_cosine) || std::abs(report.meta.gradient_cosine) > 1.0)
    throw NumericalError("report: gradient cosine out of [-1, 1]");
  check_finite_nonneg(report.meta.objective_at_trial, "objective at trial point");
}

ScoreReport run_scores(const PipelineContext& ctx, const ExperimentFits& fits) {
  const int n_selected = ctx.n_selected;
  const std::vector<int> n1s = n1_values(ctx.config, n_selected, ctx.base.rank());
  const double base_total = ctx.base.singular_values.sum();

  ScoreReport report;
  report.meta.seed = ctx.config.seed;
  report.meta.n_selected = n_selected;
  report.meta.n1_values = n1s;
  report.meta.eps_scaled = ctx.config.eps_scaled;
  report.meta.gradient_cosine = gradient_cosine(ctx.probe_central.gradient, ctx.probe_directional.gradient);
  report.meta.objective_at_trial = ctx.objective_at_eta;

  for (GradientKind kind : {GradientKind::kCentral, GradientKind::kDirectional}) {
    const GradientProbe& probe = ctx.probe(kind);
    const KindFits& kf = fits.of(kind);

    GradientMeta& meta = kind == GradientKind::kCentral ? report.meta.central : report.meta.directional;
    meta.epsilon = probe.epsilon;
    meta.norm = probe.gradient.norm();
    meta.guarded_pairs = static_cast<int>(kf.correction.guarded_pairs.size());
    for (const ExtensionReport& er : kf.reports) meta.extension_fallback = meta.extension_fallback || er.sigma_order_fallback;
    report.extensions.insert(report.extensions.end(), kf.reports.begin(), kf.reports.end());

    for (int n1 : n1s) {
      struct AlgoRow {
        const char* name;
        const SpectralBasis* basis;
      };
      std::vector<AlgoRow> algos{{"pca", &ctx.base}, {"gspca", &kf.gs}, {"agspca", &kf.ags}};
      if (const SpectralBasis* extended = extension_for(kf, n1)) algos.push_back({"egspca", extended});

      for (const AlgoRow& algo : algos) {
        const bool is_extension = std::string_view(algo.name) == "egspca";
        const int project_n = is_extension ? algo.basis->rank() : n1;

        if (kind == ctx.config.gradient_kind) {
          TrainScoreRow row;
          row.algorithm = algo.name;
          row.n1 = n1;
          // The extension keeps base components, so its captured fraction is
          // measured against the base spectrum total; every other algorithm
          // reports the leading fraction of its own spectrum.
          row.energy = is_extension ? algo.basis->singular_values.sum() / base_total
                                    : energy_fraction(algo.basis->singular_values, n1);
          std::tie(row.mean_sq_field_residual, row.mean_sq_gradient_residual) =
              truncation_stats(*algo.basis, project_n, ctx.train.data, probe.gradient);
          report.train_rows.push_back(std::move(row));
        }

        TestScoreRow row;
        row.gradient = kind_name(kind);
        row.algorithm = algo.name;
        row.n1 = n1;
        const Truncation trunc = project(*algo.basis, ctx.mu_star, project_n);
        row.field_residual_norm = trunc.residual.norm();
        row.objective_residual_norm = objective(ctx.reservoir, trunc.reconstruction);
        report.test_rows.push_back(std::move(row));
      }
    }
  }

  validate_report(report);
  return report;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot open for writing: " + path);
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IOError("write failed: " + path);
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw ValidationError("out.dir must not be empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create output directory " + dir + ": " + ec.message());
}

std::string joined(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_train_csv(const std::string& path, const std::vector<TrainScoreRow>& rows) {
  std::ofstream out = open_out(path);
  out << "algorithm,n1,energy,mean_sq_field_residual,mean_sq_gradient_residual\n";
  for (const TrainScoreRow& row : rows)
    out << row.algorithm << "," << row.n1 << "," << format_double(row.energy) << ","
        << format_double(row.mean_sq_field_residual) << "," << format_double(row.mean_sq_gradient_residual) << "\n";
  close_out(out, path);
}

void write_test_csv(const std::string& path, const std::vector<TestScoreRow>& rows) {
  std::ofstream out = open_out(path);
  out << "gradient,algorithm,n1,field_residual_norm,objective_residual_norm\n";
  for (const TestScoreRow& row : rows)
    out << row.gradient << "," << row.algorithm << "," << row.n1 << "," << format_double(row.field_residual_norm)
        << "," << format_double(row.objective_residual_norm) << "\n";
  close_out(out, path);
}

/// Writes the fitted-basis artifacts for the configured gradient kind.
void write_basis_artifacts(const ExperimentConfig& config, const PipelineContext& ctx, const ExperimentFits& fits) {
  const std::string& dir = config.out_dir;
  save_basis(joined(dir, "basis_pca.txt"), ctx.base);
  save_spectrum_csv(joined(dir, "spectrum_pca.csv"), ctx.base.singular_values);

  const KindFits& kf = fits.of(config.gradient_kind);
  save_basis(joined(dir, "basis_gspca.txt"), kf.gs, "gradient.vec");
  save_spectrum_csv(joined(dir, "spectrum_gspca.csv"), kf.gs.singular_values);
  save_basis(joined(dir, "basis_agspca.txt"), kf.ags, "gradient.vec");
  save_spectrum_csv(joined(dir, "spectrum_agspca.csv"), kf.ags.singular_values);
  for (const auto& [n1, basis] : kf.extensions)
    save_basis(joined(dir, "basis_egspca_n" + std::to_string(n1) + ".txt"), basis);
}

}  // namespace

PipelineContext build_pipeline(const ExperimentConfig& config) {
  PipelineContext ctx;
  ctx.config = config;
  ctx.train = stage_train_data(config);
  ctx.test = stage_test_data(config);
  with_stage("test-data", [&] {
    if (!(ctx.train.grid == ctx.test.grid)) throw ValidationError("train and test grids differ");
  });

  with_stage("fit", [&] { ctx.base = pca_fit(ctx.train); });
  with_stage("select", [&] {
    ctx.n_selected = select_dimension(ctx.base.singular_values, config.energy_threshold);
    if (2 * ctx.n_selected > ctx.base.rank())
      throw ValidationError("selected dimension needs 2N <= rank, got N=" + std::to_string(ctx.n_selected) +
                            ", rank=" + std::to_string(ctx.base.rank()));
  });

  ctx.reservoir = stage_case(config, ctx.train.grid);

  with_stage("truth", [&] {
    const Vector sample = ctx.test.data.col(config.test_index);
    ctx.mu_star = project(ctx.base, sample, 2 * ctx.n_selected).reconstruction;
    ctx.eta = project(ctx.base, sample, ctx.n_selected).reconstruction;
    ctx.reservoir.observations = simulate(ctx.reservoir, ctx.mu_star);
    ctx.objective_at_eta = objective(ctx.reservoir, ctx.eta);
  });

  with_stage("probe-central", [&] {
    ctx.probe_central = fd_gradient(ctx.reservoir, ctx.base, ctx.eta, 2 * ctx.n_selected, config.fd_delta);
    set_scaled_epsilon(ctx.probe_central, config.eps_scaled);
  });
  with_stage("probe-directional", [&] {
    ctx.probe_directional =
        direction_gradient(ctx.base, ctx.eta, ctx.mu_star, ctx.objective_at_eta, ctx.n_selected);
    set_scaled_epsilon(ctx.probe_directional, config.eps_scaled);
  });
  return ctx;
}

std::pair<double, double> truncation_stats(const SpectralBasis& basis, int n1, const Matrix& samples,
                                           const Vector& gradient) {
  if (samples.rows() != basis.dim()) throw ValidationError("truncation_stats: sample length mismatch");
  if (gradient.size() != basis.dim()) throw ValidationError("truncation_stats: gradient length mismatch");
  if (n1 < 0 || n1 > basis.rank()) throw ValidationError("truncation_stats: n1 out of range");

  const Matrix coefficients = project_coefficients(basis, samples, n1);
  const Matrix residual = samples - basis.components.leftCols(n1) * coefficients;
  const double mean_sq_field = residual.colwise().squaredNorm().mean();
  const double mean_sq_gradient = (gradient.transpose() * residual).array().square().mean();
  return {mean_sq_field, mean_sq_gradient};
}

ScoreReport run_scores(const PipelineContext& ctx) { return run_scores(ctx, compute_fits(ctx)); }

DescentResult subspace_descent(const ObjectiveFn& objective_fn, const SpectralBasis& basis, int n,
                               const Vector& start, int steps, double rate, double delta) {
  if (n < 1 || n > basis.rank()) throw ValidationError("subspace_descent: n out of range [1, rank]");
  if (start.size() != n) throw ValidationError("subspace_descent: start coefficient count does not match n");
  if (steps < 0) throw ValidationError("subspace_descent: steps must be >= 0");
  if (!(rate > 0.0)) throw ValidationError("subspace_descent: rate must be positive");
  if (!(delta > 0.0)) throw ValidationError("subspace_descent: delta must be positive");

  const auto field_at = [&](const Vector& coefficients) -> Vector {
    return basis.components.leftCols(n) * coefficients;
  };
  const auto checked = [&](double value) {
    if (!std::isfinite(value)) throw NumericalError("subspace_descent: objective is not finite");
    return value;
  };

  DescentResult result;
  Vector a = start;
  double current = checked(objective_fn(field_at(a)));
  result.history.push_back(current);

  int rises = 0;
  for (int t = 0; t < steps; ++t) {
    Vector gradient(n);
    for (int i = 0; i < n; ++i) {
      const double h = delta * std::sqrt(basis.singular_values[i]);
      if (!(h > 0.0)) throw ValidationError("subspace_descent: component has zero spectral scale");
      Vector probe = a;
      probe[i] = a[i] + h;
      const double forward = checked(objective_fn(field_at(probe)));
      probe[i] = a[i] - h;
      const double backward = checked(objective_fn(field_at(probe)));
      gradient[i] = (forward - backward) / (2.0 * h);
    }
    if (gradient.norm() == 0.0) break;  // stationary within FD resolution

    a -= rate * gradient;
    const double next = checked(objective_fn(field_at(a)));
    result.history.push_back(next);
    ++result.steps_taken;
    rises = next > current ? rises + 1 : 0;
    current = next;
    if (rises >= 5) {
      result.diverged = true;
      break;
    }
  }

  result.coefficients = a;
  result.field = field_at(a);
  result.objective_value = current;
  return result;
}

void run_generate(const ExperimentConfig& config) {
  const SampleMatrix train = stage_train_data(config);
  const SampleMatrix test = stage_test_data(config);
  ensure_out_dir(config.out_dir);
  save_dataset_csv(joined(config.out_dir, "train.csv"), train);
  save_dataset_csv(joined(config.out_dir, "test.csv"), test);
  save_field_pgm(joined(config.out_dir, "train_sample0.pgm"), train.data.col(0), train.grid);
  save_field_pgm(joined(config.out_dir, "test_sample0.pgm"), test.data.col(0), test.grid);
}

void run_pca(const ExperimentConfig& config) {
  const SampleMatrix train = stage_train_data(config);
  SpectralBasis basis;
  with_stage("fit", [&] { basis = pca_fit(train); });
  ensure_out_dir(config.out_dir);
  save_basis(joined(config.out_dir, "basis_pca.txt"), basis);
  save_spectrum_csv(joined(config.out_dir, "spectrum_pca.csv"), basis.singular_values);
}

void run_gspca(const ExperimentConfig& config) {
  const PipelineContext ctx = build_pipeline(config);
  const GradientProbe& probe = ctx.probe(config.gradient_kind);
  SpectralBasis basis;
  with_stage("fit", [&] { basis = gspca_fit(ctx.train, probe.gradient, probe.epsilon); });
  ensure_out_dir(config.out_dir);
  save_basis(joined(config.out_dir, "basis_gspca.txt"), basis,
             basis.metric.kind == MetricKind::kGradientWeighted ? "gradient.vec" : "");
  save_spectrum_csv(joined(config.out_dir, "spectrum_gspca.csv"), basis.singular_values);
}

void run_agspca(const ExperimentConfig& config) {
  const PipelineContext ctx = build_pipeline(config);
  const GradientProbe& probe = ctx.probe(config.gradient_kind);
  SpectralBasis basis;
  PerturbationCorrection correction;
  with_stage("fit", [&] { std::tie(basis, correction) = agspca_fit(ctx.base, probe); });
  ensure_out_dir(config.out_dir);
  save_basis(joined(config.out_dir, "basis_agspca.txt"), basis,
             basis.metric.kind == MetricKind::kGradientWeighted ? "gradient.vec" : "");
  save_spectrum_csv(joined(config.out_dir, "spectrum_agspca.csv"), basis.singular_values);

  // Correction diagnostics: per-component eigenvalue shift and the defect of
  // the corrected component in the perturbed eigenproblem.
  const Vector defect = perturbed_eigen_residual(ctx.base, probe, basis);
  const std::string path = joined(config.out_dir, "perturbation.csv");
  std::ofstream out = open_out(path);
  out << "index,sigma,sigma_shift,defect\n";
  for (int k = 0; k < basis.rank(); ++k)
    out << (k + 1) << "," << format_double(basis.singular_values[k]) << ","
        << format_double(correction.sigma_shift[k]) << "," << format_double(defect[k]) << "\n";
  close_out(out, path);
}

void run_egspca(const ExperimentConfig& config) {
  const PipelineContext ctx = build_pipeline(config);
  const KindFits fits = fit_kind(ctx, config.gradient_kind);
  if (fits.extensions.empty())
    throw ValidationError("egspca: no n1.factors exceed 1, nothing to extend");
  ensure_out_dir(config.out_dir);
  for (const auto& [n1, basis] : fits.extensions)
    save_basis(joined(config.out_dir, "basis_egspca_n" + std::to_string(n1) + ".txt"), basis);

  const std::string path = joined(config.out_dir, "extension.csv");
  std::ofstream out = open_out(path);
  out << "gradient,n1,position,component,coefficient\n";
  for (const ExtensionReport& er : fits.reports)
    for (std::size_t p = 0; p < er.indices.size(); ++p)
      out << er.gradient << "," << er.n1 << "," << (p + 1) << "," << (er.indices[p] + 1) << ","
          << format_double(ctx.probe(config.gradient_kind).coefficients[er.indices[p]]) << "\n";
  close_out(out, path);
}

void run_simulate(const ExperimentConfig& config) {
  SampleMatrix samples;
  int row = 0;
  if (!config.sim_field.empty()) {
    with_stage("sim-data", [&] {
      samples = load_dataset_csv(config.sim_field);
      row = config.sim_row;
      if (row < 0 || row >= samples.count()) throw ValidationError("sim.row out of range");
    });
  } else {
    samples = stage_test_data(config);
    row = config.test_index;
  }
  const ReservoirCase rc = stage_case(config, samples.grid);
  const Vector field = samples.data.col(row);
  Vector rates;
  with_stage("simulate", [&] { rates = simulate(rc, field); });
  ensure_out_dir(config.out_dir);
  save_case(joined(config.out_dir, "case.txt"), rc);
  save_rates_csv(joined(config.out_dir, "rates.csv"), rc, rates);
  save_field_pgm(joined(config.out_dir, "field.pgm"), field, samples.grid);
}

void run_gradient(const ExperimentConfig& config) {
  const PipelineContext ctx = build_pipeline(config);
  ensure_out_dir(config.out_dir);
  save_vector(joined(config.out_dir, "gradient_central.vec"), ctx.probe_central.gradient);
  save_vector(joined(config.out_dir, "gradient_directional.vec"), ctx.probe_directional.gradient);

  const std::string path = joined(config.out_dir, "probes.csv");
  std::ofstream out = open_out(path);
  out << "index,b_central,b_directional\n";
  for (int i = 0; i < ctx.base.rank(); ++i)
    out << (i + 1) << "," << format_double(ctx.probe_central.coefficients[i]) << ","
        << format_double(ctx.probe_directional.coefficients[i]) << "\n";
  close_out(out, path);

  ordered_json j;
  j["schema"] = "ospca-gradient-v1";
  j["n_selected"] = ctx.n_selected;
  j["objective_at_trial"] = ctx.objective_at_eta;
  j["eps_scaled"] = config.eps_scaled;
  j["gradient_cosine"] = gradient_cosine(ctx.probe_central.gradient, ctx.probe_directional.gradient);
  for (GradientKind kind : {GradientKind::kCentral, GradientKind::kDirectional}) {
    const GradientProbe& probe = ctx.probe(kind);
    j[kind_name(kind)] = {{"norm", probe.gradient.norm()}, {"epsilon", probe.epsilon}};
  }
  const std::string json_path = joined(config.out_dir, "gradient.json");
  std::ofstream jout = open_out(json_path);
  jout << j.dump(2) << "\n";
  close_out(jout, json_path);
}

ScoreReport run_train_scores(const ExperimentConfig& config) {
  const PipelineContext ctx = build_pipeline(config);
  const ExperimentFits fits = compute_fits(ctx);
  const ScoreReport report = run_scores(ctx, fits);
  ensure_out_dir(config.out_dir);
  write_basis_artifacts(config, ctx, fits);
  write_train_csv(joined(config.out_dir, "train_scores.csv"), report.train_rows);
  const std::string path = joined(config.out_dir, "report.json");
  std::ofstream out = open_out(path);
  out << report_to_json(report);
  close_out(out, path);
  return report;
}

ScoreReport run_test_scores(const ExperimentConfig& config) {
  const PipelineContext ctx = build_pipeline(config);
  const ExperimentFits fits = compute_fits(ctx);
  const ScoreReport report = run_scores(ctx, fits);
  ensure_out_dir(config.out_dir);
  write_test_csv(joined(config.out_dir, "test_scores.csv"), report.test_rows);
  save_field_pgm(joined(config.out_dir, "field_true.pgm"), ctx.mu_star, ctx.train.grid);
  save_field_pgm(joined(config.out_dir, "field_trial.pgm"), ctx.eta, ctx.train.grid);

  // One raster per test row: the truncated reconstruction of the truth.
  for (GradientKind kind : {GradientKind::kCentral, GradientKind::kDirectional}) {
    const KindFits& kf = fits.of(kind);
    for (int n1 : n1_values(ctx.config, ctx.n_selected, ctx.base.rank())) {
      struct AlgoRow {
        const char* name;
        const SpectralBasis* basis;
      };
      std::vector<AlgoRow> algos{{"pca", &ctx.base}, {"gspca", &kf.gs}, {"agspca", &kf.ags}};
      if (const SpectralBasis* extended = extension_for(kf, n1)) algos.push_back({"egspca", extended});
      for (const AlgoRow& algo : algos) {
        const int project_n = std::string_view(algo.name) == "egspca" ? algo.basis->rank() : n1;
        const Truncation trunc = project(*algo.basis, ctx.mu_star, project_n);
        const std::string name = std::string("projection_") + kind_name(kind) + "_" + algo.name + "_n" +
                                 std::to_string(n1) + ".pgm";
        save_field_pgm(joined(config.out_dir, name), trunc.reconstruction, ctx.train.grid);
      }
    }
  }

  const std::string path = joined(config.out_dir, "report.json");
  std::ofstream out = open_out(path);
  out << report_to_json(report);
  close_out(out, path);
  return report;
}

DescentResult run_descend(const ExperimentConfig& config) {
  const PipelineContext ctx = build_pipeline(config);
  const int n = config.descent_n == 0 ? ctx.n_selected : config.descent_n;
  const Vector start = project(ctx.base, ctx.eta, n).coefficients;
  DescentResult result;
  with_stage("descend", [&] {
    result = subspace_descent([&](const Vector& mu) { return objective(ctx.reservoir, mu); }, ctx.base, n, start,
                              config.descent_steps, config.descent_rate, config.fd_delta);
  });

  ensure_out_dir(config.out_dir);
  const std::string path = joined(config.out_dir, "descent.csv");
  std::ofstream out = open_out(path);
  out << "step,objective\n";
  for (std::size_t t = 0; t < result.history.size(); ++t)
    out << t << "," << format_double(result.history[t]) << "\n";
  close_out(out, path);

  save_field_pgm(joined(config.out_dir, "descent_start.pgm"), ctx.eta, ctx.train.grid);
  save_field_pgm(joined(config.out_dir, "descent_final.pgm"), result.field, ctx.train.grid);

  ordered_json j;
  j["schema"] = "ospca-descent-v1";
  j["n"] = n;
  j["steps_taken"] = result.steps_taken;
  j["objective_start"] = result.history.front();
  j["objective_final"] = result.objective_value;
  j["diverged"] = result.diverged;
  const std::string json_path = joined(config.out_dir, "descent.json");
  std::ofstream jout = open_out(json_path);
  jout << j.dump(2) << "\n";
  close_out(jout, json_path);

  if (result.diverged)
    throw NumericalError("descend: objective increased for five consecutive steps (see descent.csv)");
  return result;
}

std::string report_to_json(const ScoreReport& report) {
  ordered_json j;
  j["schema"] = "ospca-report-v1";

  ordered_json meta;
  meta["seed"] = report.meta.seed;
  meta["n_selected"] = report.meta.n_selected;
  meta["n1_values"] = report.meta.n1_values;
  meta["eps_scaled"] = report.meta.eps_scaled;
  meta["gradient_cosine"] = report.meta.gradient_cosine;
  meta["objective_at_trial"] = report.meta.objective_at_trial;
  const auto kind_meta = [](const GradientMeta& g) {
    return ordered_json{{"epsilon", g.epsilon},
                        {"norm", g.norm},
                        {"guarded_pairs", g.guarded_pairs},
                        {"extension_fallback", g.extension_fallback}};
  };
  meta["central"] = kind_meta(report.meta.central);
  meta["directional"] = kind_meta(report.meta.directional);
  j["meta"] = std::move(meta);

  j["train_scores"] = ordered_json::array();
  for (const TrainScoreRow& row : report.train_rows)
    j["train_scores"].push_back({{"algorithm", row.algorithm},
                                 {"n1", row.n1},
                                 {"energy", row.energy},
                                 {"mean_sq_field_residual", row.mean_sq_field_residual},
                                 {"mean_sq_gradient_residual", row.mean_sq_gradient_residual}});

  j["test_scores"] = ordered_json::array();
  for (const TestScoreRow& row : report.test_rows)
    j["test_scores"].push_back({{"gradient", row.gradient},
                                {"algorithm", row.algorithm},
                                {"n1", row.n1},
                                {"field_residual_norm", row.field_residual_norm},
                                {"objective_residual_norm", row.objective_residual_norm}});

  // Component ids are 1-based here, matching the spectrum CSV's index column.
  j["extensions"] = ordered_json::array();
  for (const ExtensionReport& er : report.extensions) {
    ordered_json entry;
    entry["gradient"] = er.gradient;
    entry["n1"] = er.n1;
    entry["components"] = ordered_json::array();
    for (int index : er.indices) entry["components"].push_back(index + 1);
    entry["sigma_order_fallback"] = er.sigma_order_fallback;
    j["extensions"].push_back(std::move(entry));
  }
  return j.dump(2) + "\n";
}

}  // namespace ospca
