#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/harness.hpp"
#include "core/io.hpp"
#include "core/types.hpp"
#include "test_support.hpp"

using ospca::DescentResult;
using ospca::ExperimentConfig;
using ospca::GradientKind;
using ospca::GridShape;
using ospca::Matrix;
using ospca::MetricKind;
using ospca::PipelineContext;
using ospca::SampleMatrix;
using ospca::ScoreReport;
using ospca::SpectralBasis;
using ospca::TestScoreRow;
using ospca::TrainScoreRow;
using ospca::ValidationError;
using ospca::Vector;
using ospca_test::TempDir;

namespace {

/// The reduced pipeline is deterministic, so build it once for the suite.
const PipelineContext& shared_ctx() {
  static const PipelineContext ctx = ospca::build_pipeline(ospca_test::reduced_config("unused"));
  return ctx;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string token;
  while (std::getline(in, token, sep)) out.push_back(token);
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

double number(const std::string& token) {
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  REQUIRE(end == token.c_str() + token.size());
  return value;
}

SpectralBasis identity_basis(const Vector& sigma, int d) {
  SpectralBasis basis;
  basis.components = Matrix::Identity(d, sigma.size());
  basis.singular_values = sigma;
  return basis;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("pipeline assembles consistent shared state") {
    const PipelineContext& ctx = shared_ctx();

    CHECK(ctx.train.dim() == 121);
    CHECK(ctx.train.count() == 150);
    CHECK(ctx.train.grid == GridShape{11, 11});
    CHECK(ctx.test.count() == 1);

    const int n = ctx.n_selected;
    REQUIRE(n >= 2);
    CHECK(2 * n <= ctx.base.rank());
    CHECK(ospca::energy_fraction(ctx.base.singular_values, n) >= 0.95);
    CHECK(ospca::energy_fraction(ctx.base.singular_values, n - 1) < 0.95);

    // Truth and trial point are the documented truncations of the test sample.
    const Vector sample = ctx.test.data.col(0);
    CHECK((ctx.mu_star - ospca::project(ctx.base, sample, 2 * n).reconstruction).norm() == 0.0);
    CHECK((ctx.eta - ospca::project(ctx.base, sample, n).reconstruction).norm() == 0.0);

    REQUIRE(ctx.reservoir.observations.size() == 5);
    CHECK(ctx.objective_at_eta == ospca::objective(ctx.reservoir, ctx.eta));
    CHECK(ctx.objective_at_eta > 0.0);
    CHECK(ospca::objective(ctx.reservoir, ctx.mu_star) == 0.0);

    // Both probes ride the configured scale-free weight.
    for (GradientKind kind : {GradientKind::kCentral, GradientKind::kDirectional}) {
      const auto& probe = ctx.probe(kind);
      CHECK(probe.gradient.norm() > 0.0);
      CHECK(probe.epsilon * probe.gradient.squaredNorm() == doctest::Approx(100.0).epsilon(1e-12));
    }
    CHECK(&ctx.probe(GradientKind::kCentral) == &ctx.probe_central);
    CHECK(&ctx.probe(GradientKind::kDirectional) == &ctx.probe_directional);

    // Central probe: exact zeros beyond the probed 2N components.
    for (int i = 2 * n; i < ctx.base.rank(); ++i) CHECK(ctx.probe_central.coefficients(i) == 0.0);
    // Directional probe: exact zeros on the known first N components.
    for (int i = 0; i < n; ++i) CHECK(ctx.probe_directional.coefficients(i) == 0.0);
    CHECK(ctx.probe_directional.coefficients.segment(n, n).norm() > 0.0);
  }

  TEST_CASE("score report has the documented row structure") {
    const PipelineContext& ctx = shared_ctx();
    const ScoreReport report = ospca::run_scores(ctx);

    const int n = ctx.n_selected;
    const int n1b = static_cast<int>(std::ceil(1.5 * n - 1e-9));
    CHECK(report.meta.seed == 2024);
    CHECK(report.meta.n_selected == n);
    CHECK(report.meta.n1_values == std::vector<int>{n, n1b});
    CHECK(report.meta.eps_scaled == 100.0);
    CHECK(std::abs(report.meta.gradient_cosine) <= 1.0);
    CHECK(report.meta.objective_at_trial == ctx.objective_at_eta);
    CHECK(report.meta.central.norm == doctest::Approx(ctx.probe_central.gradient.norm()));
    CHECK(report.meta.central.epsilon == ctx.probe_central.epsilon);
    CHECK_FALSE(report.meta.central.extension_fallback);
    CHECK_FALSE(report.meta.directional.extension_fallback);

    // Train rows: configured (central) kind only; the extension appears only
    // past the selected dimension.
    REQUIRE(report.train_rows.size() == 7);
    const char* expected_algo[7] = {"pca", "gspca", "agspca", "pca", "gspca", "agspca", "egspca"};
    const int expected_n1[7] = {n, n, n, n1b, n1b, n1b, n1b};
    for (int i = 0; i < 7; ++i) {
      CHECK(report.train_rows[i].algorithm == expected_algo[i]);
      CHECK(report.train_rows[i].n1 == expected_n1[i]);
    }

    // Test rows: both kinds, same per-kind layout.
    REQUIRE(report.test_rows.size() == 14);
    for (int i = 0; i < 14; ++i) {
      CHECK(report.test_rows[i].gradient == (i < 7 ? "central" : "directional"));
      CHECK(report.test_rows[i].algorithm == expected_algo[i % 7]);
      CHECK(report.test_rows[i].n1 == expected_n1[i % 7]);
    }

    // One extension selection per gradient kind.
    REQUIRE(report.extensions.size() == 2);
    for (const auto& ext : report.extensions) {
      CHECK(ext.n1 == n1b);
      CHECK(static_cast<int>(ext.indices.size()) == n1b - n);
      for (int index : ext.indices) {
        CHECK(index >= n);
        CHECK(index < ctx.base.rank());
      }
      CHECK_FALSE(ext.sigma_order_fallback);
    }
    CHECK(report.extensions[0].gradient == "central");
    CHECK(report.extensions[1].gradient == "directional");

    // The plain fit reports its own captured energy; the extension keeps base
    // components so it can never beat the spectral optimum at equal rank.
    CHECK(report.train_rows[0].energy == ospca::energy_fraction(ctx.base.singular_values, n));
    CHECK(report.train_rows[6].energy <= report.train_rows[3].energy + 1e-12);

    // The exact weighted fit minimizes the combined W-loss, so it cannot lose
    // to the plain fit on that combination at the same rank.
    const double eps = ctx.probe_central.epsilon;
    for (int block : {0, 3}) {
      const TrainScoreRow& pca = report.train_rows[block];
      const TrainScoreRow& gs = report.train_rows[block + 1];
      const double pca_loss = pca.mean_sq_field_residual + eps * pca.mean_sq_gradient_residual;
      const double gs_loss = gs.mean_sq_field_residual + eps * gs.mean_sq_gradient_residual;
      CHECK(gs_loss <= pca_loss * (1.0 + 1e-10));
    }
  }

  TEST_CASE("zero weight collapses the weighted and corrected fits onto the plain fit") {
    ExperimentConfig config = ospca_test::reduced_config("unused");
    ospca::config_set(config, "gs.eps_scaled", "0");
    const PipelineContext ctx = ospca::build_pipeline(config);
    CHECK(ctx.probe_central.epsilon == 0.0);

    const ScoreReport report = ospca::run_scores(ctx);
    CHECK(report.meta.central.epsilon == 0.0);
    REQUIRE(report.train_rows.size() == 7);
    for (int block : {0, 3}) {
      const TrainScoreRow& pca = report.train_rows[block];
      for (int offset : {1, 2}) {
        const TrainScoreRow& other = report.train_rows[block + offset];
        CHECK(other.energy == pca.energy);
        CHECK(other.mean_sq_field_residual == pca.mean_sq_field_residual);
        CHECK(other.mean_sq_gradient_residual == pca.mean_sq_gradient_residual);
      }
    }
    for (int i = 0; i < 7; ++i) {
      const TestScoreRow& central = report.test_rows[i];
      if (central.algorithm == "pca") continue;
      if (central.algorithm == "egspca") break;
      CHECK(central.field_residual_norm == report.test_rows[i - (central.algorithm == "gspca" ? 1 : 2)].field_residual_norm);
    }
  }

  TEST_CASE("train-scores stage persists artifacts that reproduce the report") {
    TempDir dir;
    ExperimentConfig config = ospca_test::reduced_config(dir.file("out"));
    const ScoreReport report = ospca::run_train_scores(config);
    const PipelineContext& ctx = shared_ctx();  // same config apart from out.dir
    const int n = ctx.n_selected;
    const int n1b = report.meta.n1_values.back();

    const std::string out = dir.file("out");
    for (const std::string& name :
         {std::string("basis_pca.txt"), std::string("spectrum_pca.csv"), std::string("basis_gspca.txt"),
          std::string("gradient.vec"), std::string("spectrum_gspca.csv"), std::string("basis_agspca.txt"),
          std::string("spectrum_agspca.csv"), std::string("basis_egspca_n") + std::to_string(n1b) + ".txt",
          std::string("train_scores.csv"), std::string("report.json")})
      CHECK(ospca_test::file_exists(out + "/" + name));

    // The persisted gradient is the central probe's gradient, verbatim.
    const Vector gradient = ospca::load_vector(out + "/gradient.vec");
    CHECK((gradient.array() == ctx.probe_central.gradient.array()).all());

    // Reloading the bases and recomputing every train row reproduces the CSV.
    SpectralBasis pca = ospca::load_basis(out + "/basis_pca.txt");
    SpectralBasis gs = ospca::load_basis(out + "/basis_gspca.txt");
    SpectralBasis ags = ospca::load_basis(out + "/basis_agspca.txt");
    SpectralBasis ext = ospca::load_basis(out + "/basis_egspca_n" + std::to_string(n1b) + ".txt");
    CHECK((pca.components.array() == ctx.base.components.array()).all());
    CHECK(gs.metric.kind == MetricKind::kGradientWeighted);
    CHECK(gs.metric.epsilon == ctx.probe_central.epsilon);

    const auto rows = lines_of(ospca_test::read_file(out + "/train_scores.csv"));
    REQUIRE(rows.size() == 1 + report.train_rows.size());
    CHECK(rows[0] == "algorithm,n1,energy,mean_sq_field_residual,mean_sq_gradient_residual");

    const double base_total = pca.singular_values.sum();
    for (std::size_t i = 0; i < report.train_rows.size(); ++i) {
      const TrainScoreRow& row = report.train_rows[i];
      const auto fields = split(rows[1 + i], ',');
      REQUIRE(fields.size() == 5);
      CHECK(fields[0] == row.algorithm);
      CHECK(number(fields[1]) == row.n1);
      CHECK(number(fields[2]) == row.energy);
      CHECK(number(fields[3]) == row.mean_sq_field_residual);
      CHECK(number(fields[4]) == row.mean_sq_gradient_residual);

      const SpectralBasis& basis = row.algorithm == "pca"      ? pca
                                   : row.algorithm == "gspca"  ? gs
                                   : row.algorithm == "agspca" ? ags
                                                               : ext;
      const int project_n = row.algorithm == "egspca" ? basis.rank() : row.n1;
      const auto [field_ms, gradient_ms] = ospca::truncation_stats(basis, project_n, ctx.train.data, gradient);
      CHECK(field_ms == row.mean_sq_field_residual);
      CHECK(gradient_ms == row.mean_sq_gradient_residual);
      const double energy = row.algorithm == "egspca" ? basis.singular_values.sum() / base_total
                                                      : ospca::energy_fraction(basis.singular_values, row.n1);
      CHECK(energy == row.energy);
    }

    // The JSON report mirrors the same numbers under the documented schema.
    const nlohmann::json j = nlohmann::json::parse(ospca_test::read_file(out + "/report.json"));
    CHECK(j.at("schema") == "ospca-report-v1");
    CHECK(j.at("meta").at("seed") == 2024);
    CHECK(j.at("meta").at("n_selected") == n);
    CHECK(j.at("meta").at("n1_values").get<std::vector<int>>() == report.meta.n1_values);
    CHECK(j.at("meta").at("central").at("guarded_pairs").get<int>() >= 0);
    REQUIRE(j.at("train_scores").size() == report.train_rows.size());
    CHECK(j.at("train_scores")[0].at("algorithm") == "pca");
    CHECK(j.at("train_scores")[0].at("energy").get<double>() == report.train_rows[0].energy);
    REQUIRE(j.at("test_scores").size() == report.test_rows.size());
    REQUIRE(j.at("extensions").size() == 2);
    // Component ids are published 1-based.
    const auto components = j.at("extensions")[0].at("components").get<std::vector<int>>();
    REQUIRE(components.size() == report.extensions[0].indices.size());
    for (std::size_t p = 0; p < components.size(); ++p)
      CHECK(components[p] == report.extensions[0].indices[p] + 1);
  }

  TEST_CASE("test-scores stage persists the mismatch table and one raster per row") {
    TempDir dir;
    ExperimentConfig config = ospca_test::reduced_config(dir.file("out"));
    const ScoreReport report = ospca::run_test_scores(config);
    const std::string out = dir.file("out");

    CHECK(ospca_test::file_exists(out + "/field_true.pgm"));
    CHECK(ospca_test::file_exists(out + "/field_trial.pgm"));
    for (const TestScoreRow& row : report.test_rows) {
      const std::string name =
          "projection_" + row.gradient + "_" + row.algorithm + "_n" + std::to_string(row.n1) + ".pgm";
      CHECK(ospca_test::file_exists(out + "/" + name));
    }

    const auto rows = lines_of(ospca_test::read_file(out + "/test_scores.csv"));
    REQUIRE(rows.size() == 1 + report.test_rows.size());
    CHECK(rows[0] == "gradient,algorithm,n1,field_residual_norm,objective_residual_norm");
    for (std::size_t i = 0; i < report.test_rows.size(); ++i) {
      const auto fields = split(rows[1 + i], ',');
      REQUIRE(fields.size() == 5);
      CHECK(fields[0] == report.test_rows[i].gradient);
      CHECK(fields[1] == report.test_rows[i].algorithm);
      CHECK(number(fields[3]) == report.test_rows[i].field_residual_norm);
      CHECK(number(fields[4]) == report.test_rows[i].objective_residual_norm);
      CHECK(report.test_rows[i].field_residual_norm >= 0.0);
      CHECK(report.test_rows[i].objective_residual_norm >= 0.0);
    }

    const nlohmann::json j = nlohmann::json::parse(ospca_test::read_file(out + "/report.json"));
    CHECK(j.at("schema") == "ospca-report-v1");
    CHECK(j.at("test_scores").size() == report.test_rows.size());
  }

  TEST_CASE("descent converges on a quadratic objective at the textbook rate") {
    SpectralBasis basis = identity_basis(Vector{{1.0, 1.0}}, 2);
    const Vector target{{2.0, 0.0}};
    auto quadratic = [&](const Vector& mu) { return (mu - target).squaredNorm(); };

    DescentResult result = ospca::subspace_descent(quadratic, basis, 1, Vector::Zero(1), 200, 0.25, 1e-3);
    CHECK_FALSE(result.diverged);
    CHECK(std::abs(result.coefficients(0) - 2.0) < 1e-6);
    CHECK(result.objective_value < 1e-12);
    CHECK(result.history.front() == doctest::Approx(4.0));
    REQUIRE(result.history.size() == static_cast<std::size_t>(result.steps_taken) + 1);
    for (std::size_t t = 1; t < result.history.size(); ++t) CHECK(result.history[t] <= result.history[t - 1]);

    // Starting at the optimum leaves nothing to do: the very first central
    // difference cancels exactly.
    DescentResult still = ospca::subspace_descent(quadratic, basis, 1, Vector{{2.0}}, 50, 0.25, 1e-3);
    CHECK(still.steps_taken == 0);
    CHECK(still.coefficients(0) == 2.0);
    CHECK(still.history.size() == 1);

    // An oversized rate bounces outward and is cut off after five rises.
    DescentResult runaway = ospca::subspace_descent(quadratic, basis, 1, Vector::Zero(1), 50, 1.2, 1e-3);
    CHECK(runaway.diverged);
    CHECK(runaway.steps_taken == 5);

    CHECK_THROWS_AS(ospca::subspace_descent(quadratic, basis, 0, Vector::Zero(0), 10, 0.1, 1e-3), ValidationError);
    CHECK_THROWS_AS(ospca::subspace_descent(quadratic, basis, 1, Vector::Zero(2), 10, 0.1, 1e-3), ValidationError);
    CHECK_THROWS_AS(ospca::subspace_descent(quadratic, basis, 1, Vector::Zero(1), 10, 0.0, 1e-3), ValidationError);
    CHECK_THROWS_AS(ospca::subspace_descent(quadratic, basis, 1, Vector::Zero(1), 10, 0.1, 0.0), ValidationError);
    CHECK_THROWS_AS(ospca::subspace_descent(quadratic, basis, 1, Vector::Zero(1), -1, 0.1, 1e-3), ValidationError);

    SpectralBasis degenerate = identity_basis(Vector{{1.0, 0.0}}, 2);
    CHECK_THROWS_AS(ospca::subspace_descent(quadratic, degenerate, 2, Vector::Zero(2), 10, 0.1, 1e-3),
                    ValidationError);
  }

  TEST_CASE("descent in the weighted one-component subspace reaches a better objective") {
    // Samples whose dominant plain direction (e1) is useless for the target,
    // while the gradient-weighted fit promotes e2.
    Matrix data(2, 4);
    data.col(0) = Vector{{2.0, 0.0}};
    data.col(1) = Vector{{-2.0, 0.0}};
    data.col(2) = Vector{{0.0, 1.0}};
    data.col(3) = Vector{{0.0, -1.0}};
    SampleMatrix samples;
    samples.data = data;
    samples.grid = GridShape{2, 1};

    const Vector target{{0.5, 1.5}};
    auto objective_fn = [&](const Vector& mu) { return (mu - target).squaredNorm(); };

    SpectralBasis plain = ospca::pca_fit(samples);
    REQUIRE(plain.rank() == 2);
    CHECK(plain.singular_values(0) == doctest::Approx(2.0));
    CHECK((plain.components.col(0) - Vector{{1.0, 0.0}}).norm() < 1e-12);

    SpectralBasis weighted = ospca::gspca_fit(samples, Vector{{0.0, 1.0}}, 8.0);
    CHECK(weighted.singular_values(0) == doctest::Approx(4.5));

    DescentResult on_plain = ospca::subspace_descent(objective_fn, plain, 1, Vector::Zero(1), 300, 0.25, 1e-3);
    DescentResult on_weighted = ospca::subspace_descent(objective_fn, weighted, 1, Vector::Zero(1), 300, 0.25, 1e-3);

    CHECK(on_plain.objective_value == doctest::Approx(2.25).epsilon(1e-3));
    CHECK(on_weighted.objective_value == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(on_weighted.objective_value < on_plain.objective_value);
  }

  TEST_CASE("generate stage writes datasets and previews") {
    TempDir dir;
    ExperimentConfig config = ospca_test::tiny_config(dir.file("out"));
    ospca::run_generate(config);

    const std::string out = dir.file("out");
    for (const char* name : {"train.csv", "test.csv", "train_sample0.pgm", "test_sample0.pgm"})
      CHECK(ospca_test::file_exists(out + "/" + std::string(name)));

    SampleMatrix train = ospca::load_dataset_csv(out + "/train.csv");
    CHECK(train.dim() == 49);
    CHECK(train.count() == 60);
    CHECK(train.grid == GridShape{7, 7});
    CHECK(ospca_test::read_file(out + "/train_sample0.pgm").rfind("P2\n7 7\n255\n", 0) == 0);
  }

  TEST_CASE("weighted stage at zero weight emits the plain basis byte for byte") {
    TempDir dir;
    ExperimentConfig plain_config = ospca_test::tiny_config(dir.file("plain"));
    ospca::run_pca(plain_config);

    ExperimentConfig zero_config = ospca_test::tiny_config(dir.file("zero"));
    ospca::config_set(zero_config, "gs.eps_scaled", "0");
    ospca::run_gspca(zero_config);

    CHECK(ospca_test::read_file(dir.file("plain") + "/basis_pca.txt") ==
          ospca_test::read_file(dir.file("zero") + "/basis_gspca.txt"));
    CHECK(ospca_test::read_file(dir.file("plain") + "/spectrum_pca.csv") ==
          ospca_test::read_file(dir.file("zero") + "/spectrum_gspca.csv"));
    CHECK_FALSE(ospca_test::file_exists(dir.file("zero") + "/gradient.vec"));
  }

  TEST_CASE("descend stage records the objective trace and rasters") {
    TempDir dir;
    ExperimentConfig config = ospca_test::tiny_config(dir.file("out"));
    ospca::config_set(config, "descent.steps", "3");
    ospca::config_set(config, "descent.rate", "1e-3");

    DescentResult result = ospca::run_descend(config);
    CHECK_FALSE(result.diverged);
    CHECK(result.steps_taken == 3);

    const std::string out = dir.file("out");
    const auto rows = lines_of(ospca_test::read_file(out + "/descent.csv"));
    REQUIRE(rows.size() == 5);  // header + start + three steps
    CHECK(rows[0] == "step,objective");
    CHECK(split(rows[1], ',')[0] == "0");
    CHECK(ospca_test::file_exists(out + "/descent_start.pgm"));
    CHECK(ospca_test::file_exists(out + "/descent_final.pgm"));

    const nlohmann::json j = nlohmann::json::parse(ospca_test::read_file(out + "/descent.json"));
    CHECK(j.at("schema") == "ospca-descent-v1");
    CHECK(j.at("steps_taken") == 3);
    CHECK(j.at("diverged") == false);
    CHECK(j.at("objective_start").get<double>() == result.history.front());
    CHECK(j.at("objective_final").get<double>() == result.objective_value);
  }

  TEST_CASE("pipeline failures carry their stage tag") {
    ExperimentConfig config = ospca_test::tiny_config("unused");
    ospca::config_set(config, "pca.threshold", "1.0");  // forces N = rank, so 2N > rank
    try {
      ospca::build_pipeline(config);
      FAIL("expected ValidationError");
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).rfind("select:", 0) == 0);
    }

    ExperimentConfig bad_index = ospca_test::tiny_config("unused");
    ospca::config_set(bad_index, "test.index", "7");  // only one test sample
    try {
      ospca::build_pipeline(bad_index);
      FAIL("expected ValidationError");
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).rfind("test-data:", 0) == 0);
    }
  }
}
