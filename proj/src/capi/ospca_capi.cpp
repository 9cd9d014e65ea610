#include "ospca.h"

#include <cstring>
#include <exception>
#include <string>
#include <utility>

#include "core/config.hpp"
#include "core/decomposition.hpp"
#include "core/harness.hpp"
#include "core/io.hpp"
#include "core/objective_sensitive.hpp"
#include "core/randfield.hpp"
#include "core/reservoir.hpp"

struct ospca_config {
  ospca::ExperimentConfig impl;
};
struct ospca_dataset {
  ospca::SampleMatrix impl;
};
struct ospca_basis {
  ospca::SpectralBasis impl;
};
struct ospca_case {
  ospca::ReservoirCase impl;
};
struct ospca_report {
  ospca::ScoreReport impl;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

void set_error(const char* message) { g_last_error = message == nullptr ? "" : message; }

/// Runs body, translating the library's exception taxonomy into status codes.
template <typename F>
ospca_status guarded(F&& body) noexcept {
  try {
    body();
    return OSPCA_OK;
  } catch (const ospca::ValidationError& e) {
    set_error(e.what());
    return OSPCA_ERR_INVALID_ARGUMENT;
  } catch (const ospca::IOError& e) {
    set_error(e.what());
    return OSPCA_ERR_IO;
  } catch (const ospca::NumericalError& e) {
    set_error(e.what());
    return OSPCA_ERR_NUMERICAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return OSPCA_ERR_NUMERICAL;
  } catch (...) {
    set_error("unknown error");
    return OSPCA_ERR_NUMERICAL;
  }
}

ospca_status invalid(const char* message) {
  set_error(message);
  return OSPCA_ERR_INVALID_ARGUMENT;
}

ospca::Vector to_vector(const double* data, size_t len) {
  ospca::Vector v(static_cast<Eigen::Index>(len));
  std::memcpy(v.data(), data, len * sizeof(double));
  return v;
}

}  // namespace

extern "C" {

const char* ospca_last_error(void) { return g_last_error.c_str(); }

/* --- configuration ------------------------------------------------------ */

ospca_status ospca_config_create(ospca_config** out) {
  if (out == nullptr) return invalid("ospca_config_create: out is NULL");
  return guarded([&] { *out = new ospca_config{ospca::default_config()}; });
}

ospca_status ospca_config_load(const char* path, ospca_config** out) {
  if (path == nullptr || out == nullptr) return invalid("ospca_config_load: NULL argument");
  return guarded([&] {
    auto config = ospca::config_from_entries(ospca::parse_config_file(path));
    *out = new ospca_config{std::move(config)};
  });
}

ospca_status ospca_config_set(ospca_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) return invalid("ospca_config_set: NULL argument");
  return guarded([&] { ospca::config_set(config->impl, key, value); });
}

ospca_status ospca_config_get(const ospca_config* config, const char* key, char* buffer, size_t size,
                              size_t* needed) {
  if (config == nullptr || key == nullptr) return invalid("ospca_config_get: NULL argument");
  return guarded([&] {
    const std::string value = ospca::config_get(config->impl, key);
    // Report the required size before any failure so a NULL/short buffer
    // works as a size query.
    if (needed != nullptr) *needed = value.size() + 1;
    if (buffer == nullptr || value.size() + 1 > size)
      throw ospca::ValidationError("ospca_config_get: buffer too small");
    std::memcpy(buffer, value.c_str(), value.size() + 1);
  });
}

void ospca_config_free(ospca_config* config) { delete config; }

/* --- datasets ------------------------------------------------------------ */

ospca_status ospca_dataset_generate(const ospca_config* config, ospca_dataset_kind kind, ospca_dataset** out) {
  if (config == nullptr || out == nullptr) return invalid("ospca_dataset_generate: NULL argument");
  if (kind != OSPCA_DATASET_TRAIN && kind != OSPCA_DATASET_TEST)
    return invalid("ospca_dataset_generate: unknown dataset kind");
  return guarded([&] {
    const ospca::ExperimentConfig& c = config->impl;
    const bool train = kind == OSPCA_DATASET_TRAIN;
    auto samples = ospca::make_dataset(train ? c.train_count : c.test_count, train ? c.train : c.test, c.kmin,
                                       c.kmax);
    *out = new ospca_dataset{std::move(samples)};
  });
}

ospca_status ospca_dataset_load(const char* path, ospca_dataset** out) {
  if (path == nullptr || out == nullptr) return invalid("ospca_dataset_load: NULL argument");
  return guarded([&] { *out = new ospca_dataset{ospca::load_dataset_csv(path)}; });
}

ospca_status ospca_dataset_save(const ospca_dataset* dataset, const char* path) {
  if (dataset == nullptr || path == nullptr) return invalid("ospca_dataset_save: NULL argument");
  return guarded([&] { ospca::save_dataset_csv(path, dataset->impl); });
}

ospca_status ospca_dataset_shape(const ospca_dataset* dataset, int* nx, int* ny, int* count) {
  if (dataset == nullptr) return invalid("ospca_dataset_shape: dataset is NULL");
  if (nx != nullptr) *nx = dataset->impl.grid.nx;
  if (ny != nullptr) *ny = dataset->impl.grid.ny;
  if (count != nullptr) *count = dataset->impl.count();
  return OSPCA_OK;
}

ospca_status ospca_dataset_sample(const ospca_dataset* dataset, int index, double* buffer, size_t len) {
  if (dataset == nullptr || buffer == nullptr) return invalid("ospca_dataset_sample: NULL argument");
  return guarded([&] {
    if (index < 0 || index >= dataset->impl.count())
      throw ospca::ValidationError("ospca_dataset_sample: index out of range");
    if (len != static_cast<size_t>(dataset->impl.dim()))
      throw ospca::ValidationError("ospca_dataset_sample: buffer length does not match sample length");
    const ospca::Vector sample = dataset->impl.data.col(index);
    std::memcpy(buffer, sample.data(), len * sizeof(double));
  });
}

void ospca_dataset_free(ospca_dataset* dataset) { delete dataset; }

/* --- spectral bases ------------------------------------------------------- */

ospca_status ospca_pca_fit(const ospca_dataset* dataset, ospca_basis** out) {
  if (dataset == nullptr || out == nullptr) return invalid("ospca_pca_fit: NULL argument");
  return guarded([&] { *out = new ospca_basis{ospca::pca_fit(dataset->impl)}; });
}

ospca_status ospca_gspca_fit(const ospca_dataset* dataset, const double* gradient, size_t len, double epsilon,
                             ospca_basis** out) {
  if (dataset == nullptr || gradient == nullptr || out == nullptr) return invalid("ospca_gspca_fit: NULL argument");
  return guarded([&] {
    *out = new ospca_basis{ospca::gspca_fit(dataset->impl, to_vector(gradient, len), epsilon)};
  });
}

ospca_status ospca_basis_load(const char* path, ospca_basis** out) {
  if (path == nullptr || out == nullptr) return invalid("ospca_basis_load: NULL argument");
  return guarded([&] { *out = new ospca_basis{ospca::load_basis(path)}; });
}

ospca_status ospca_basis_save(const ospca_basis* basis, const char* path, const char* gradient_filename) {
  if (basis == nullptr || path == nullptr) return invalid("ospca_basis_save: NULL argument");
  return guarded(
      [&] { ospca::save_basis(path, basis->impl, gradient_filename == nullptr ? "" : gradient_filename); });
}

ospca_status ospca_basis_shape(const ospca_basis* basis, int* dim, int* rank) {
  if (basis == nullptr) return invalid("ospca_basis_shape: basis is NULL");
  if (dim != nullptr) *dim = basis->impl.dim();
  if (rank != nullptr) *rank = basis->impl.rank();
  return OSPCA_OK;
}

ospca_status ospca_basis_sigma(const ospca_basis* basis, double* buffer, size_t len) {
  if (basis == nullptr || buffer == nullptr) return invalid("ospca_basis_sigma: NULL argument");
  return guarded([&] {
    if (len != static_cast<size_t>(basis->impl.rank()))
      throw ospca::ValidationError("ospca_basis_sigma: buffer length does not match rank");
    std::memcpy(buffer, basis->impl.singular_values.data(), len * sizeof(double));
  });
}

ospca_status ospca_basis_component(const ospca_basis* basis, int index, double* buffer, size_t len) {
  if (basis == nullptr || buffer == nullptr) return invalid("ospca_basis_component: NULL argument");
  return guarded([&] {
    if (index < 0 || index >= basis->impl.rank())
      throw ospca::ValidationError("ospca_basis_component: index out of range");
    if (len != static_cast<size_t>(basis->impl.dim()))
      throw ospca::ValidationError("ospca_basis_component: buffer length does not match dimension");
    const ospca::Vector component = basis->impl.components.col(index);
    std::memcpy(buffer, component.data(), len * sizeof(double));
  });
}

ospca_status ospca_basis_select_dimension(const ospca_basis* basis, double threshold, int* out) {
  if (basis == nullptr || out == nullptr) return invalid("ospca_basis_select_dimension: NULL argument");
  return guarded([&] { *out = ospca::select_dimension(basis->impl.singular_values, threshold); });
}

ospca_status ospca_basis_project(const ospca_basis* basis, const double* vec, size_t len, int n_kept,
                                 double* coefficients, double* reconstruction) {
  if (basis == nullptr || vec == nullptr || coefficients == nullptr)
    return invalid("ospca_basis_project: NULL argument");
  return guarded([&] {
    const ospca::Truncation trunc = ospca::project(basis->impl, to_vector(vec, len), n_kept);
    std::memcpy(coefficients, trunc.coefficients.data(), static_cast<size_t>(n_kept) * sizeof(double));
    if (reconstruction != nullptr)
      std::memcpy(reconstruction, trunc.reconstruction.data(), len * sizeof(double));
  });
}

void ospca_basis_free(ospca_basis* basis) { delete basis; }

/* --- reservoir cases ------------------------------------------------------ */

ospca_status ospca_case_create(const ospca_config* config, int nx, int ny, ospca_case** out) {
  if (config == nullptr || out == nullptr) return invalid("ospca_case_create: NULL argument");
  return guarded([&] {
    const ospca::ExperimentConfig& c = config->impl;
    *out = new ospca_case{ospca::make_five_spot_case(nx, ny, c.case_dx, c.case_dy, c.case_dz, c.viscosity,
                                                     c.injector_bhp, c.producer_bhp, c.well_radius)};
  });
}

ospca_status ospca_case_well_count(const ospca_case* rc, int* out) {
  if (rc == nullptr || out == nullptr) return invalid("ospca_case_well_count: NULL argument");
  *out = static_cast<int>(rc->impl.wells.size());
  return OSPCA_OK;
}

ospca_status ospca_case_simulate(const ospca_case* rc, const double* field, size_t len, double* rates,
                                 size_t rates_len) {
  if (rc == nullptr || field == nullptr || rates == nullptr) return invalid("ospca_case_simulate: NULL argument");
  return guarded([&] {
    if (rates_len != rc->impl.wells.size())
      throw ospca::ValidationError("ospca_case_simulate: rates buffer length does not match well count");
    const ospca::Vector result = ospca::simulate(rc->impl, to_vector(field, len));
    std::memcpy(rates, result.data(), rates_len * sizeof(double));
  });
}

ospca_status ospca_case_set_observations(ospca_case* rc, const double* rates, size_t len) {
  if (rc == nullptr || rates == nullptr) return invalid("ospca_case_set_observations: NULL argument");
  return guarded([&] {
    if (len != rc->impl.wells.size())
      throw ospca::ValidationError("ospca_case_set_observations: length does not match well count");
    rc->impl.observations = to_vector(rates, len);
  });
}

ospca_status ospca_case_objective(const ospca_case* rc, const double* field, size_t len, double* out) {
  if (rc == nullptr || field == nullptr || out == nullptr) return invalid("ospca_case_objective: NULL argument");
  return guarded([&] { *out = ospca::objective(rc->impl, to_vector(field, len)); });
}

void ospca_case_free(ospca_case* rc) { delete rc; }

/* --- pipeline stages ------------------------------------------------------ */

namespace {

ospca_status run_stage(const ospca_config* config, void (*stage)(const ospca::ExperimentConfig&),
                       const char* name) {
  if (config == nullptr) {
    set_error((std::string(name) + ": config is NULL").c_str());
    return OSPCA_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { stage(config->impl); });
}

ospca_status run_score_stage(const ospca_config* config,
                             ospca::ScoreReport (*stage)(const ospca::ExperimentConfig&), const char* name,
                             ospca_report** report) {
  if (config == nullptr) {
    set_error((std::string(name) + ": config is NULL").c_str());
    return OSPCA_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    ospca::ScoreReport result = stage(config->impl);
    if (report != nullptr) {
      std::string json = ospca::report_to_json(result);
      *report = new ospca_report{std::move(result), std::move(json)};
    }
  });
}

}  // namespace

ospca_status ospca_run_generate(const ospca_config* config) {
  return run_stage(config, &ospca::run_generate, "ospca_run_generate");
}
ospca_status ospca_run_pca(const ospca_config* config) { return run_stage(config, &ospca::run_pca, "ospca_run_pca"); }
ospca_status ospca_run_gspca(const ospca_config* config) {
  return run_stage(config, &ospca::run_gspca, "ospca_run_gspca");
}
ospca_status ospca_run_agspca(const ospca_config* config) {
  return run_stage(config, &ospca::run_agspca, "ospca_run_agspca");
}
ospca_status ospca_run_egspca(const ospca_config* config) {
  return run_stage(config, &ospca::run_egspca, "ospca_run_egspca");
}
ospca_status ospca_run_simulate(const ospca_config* config) {
  return run_stage(config, &ospca::run_simulate, "ospca_run_simulate");
}
ospca_status ospca_run_gradient(const ospca_config* config) {
  return run_stage(config, &ospca::run_gradient, "ospca_run_gradient");
}

ospca_status ospca_run_train_scores(const ospca_config* config, ospca_report** report) {
  return run_score_stage(config, &ospca::run_train_scores, "ospca_run_train_scores", report);
}

ospca_status ospca_run_test_scores(const ospca_config* config, ospca_report** report) {
  return run_score_stage(config, &ospca::run_test_scores, "ospca_run_test_scores", report);
}

ospca_status ospca_run_descend(const ospca_config* config) {
  if (config == nullptr) {
    set_error("ospca_run_descend: config is NULL");
    return OSPCA_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { ospca::run_descend(config->impl); });
}

const char* ospca_report_json(const ospca_report* report) {
  return report == nullptr ? "" : report->json.c_str();
}

void ospca_report_free(ospca_report* report) { delete report; }

}  // extern "C"
