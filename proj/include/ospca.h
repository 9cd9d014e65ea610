/*
 * ospca — objective-sensitive spectral decomposition toolkit.
 *
 * C interface over the C++ core: opaque handles, integer status codes, and a
 * per-thread error message. All functions returning ospca_status never throw;
 * on failure they leave outputs untouched and set ospca_last_error().
 *
 * Array arguments are plain double buffers; the caller owns them and supplies
 * their lengths. Handles are created by *_create/*_load/*_fit functions and
 * released with the matching *_free (free functions accept NULL).
 */
#ifndef OSPCA_H
#define OSPCA_H

#include <stddef.h>

#define OSPCA_VERSION "1.0.0"

#if defined(_WIN32)
#define OSPCA_API __declspec(dllexport)
#else
#define OSPCA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ospca_status {
  OSPCA_OK = 0,
  OSPCA_ERR_INVALID_ARGUMENT = 1, /* precondition or config violation */
  OSPCA_ERR_NUMERICAL = 2,        /* solver/decomposition failure, divergence */
  OSPCA_ERR_IO = 3                /* missing/corrupt file */
} ospca_status;

typedef enum ospca_dataset_kind { OSPCA_DATASET_TRAIN = 0, OSPCA_DATASET_TEST = 1 } ospca_dataset_kind;

typedef struct ospca_config ospca_config;
typedef struct ospca_dataset ospca_dataset;
typedef struct ospca_basis ospca_basis;
typedef struct ospca_case ospca_case;
typedef struct ospca_report ospca_report;

/* Message describing this thread's most recent failure. Never NULL; empty
 * until a call fails. Valid until the thread's next failing ospca call. */
OSPCA_API const char* ospca_last_error(void);

/* --- configuration ------------------------------------------------------ */

OSPCA_API ospca_status ospca_config_create(ospca_config** out);
OSPCA_API ospca_status ospca_config_load(const char* path, ospca_config** out);
OSPCA_API ospca_status ospca_config_set(ospca_config* config, const char* key, const char* value);
/* Serializes one key's effective value. Fails with OSPCA_ERR_INVALID_ARGUMENT
 * if the buffer is too small; needed (if non-NULL) receives the required size
 * including the terminator. */
OSPCA_API ospca_status ospca_config_get(const ospca_config* config, const char* key, char* buffer, size_t size,
                                        size_t* needed);
OSPCA_API void ospca_config_free(ospca_config* config);

/* --- datasets ------------------------------------------------------------ */

OSPCA_API ospca_status ospca_dataset_generate(const ospca_config* config, ospca_dataset_kind kind,
                                              ospca_dataset** out);
OSPCA_API ospca_status ospca_dataset_load(const char* path, ospca_dataset** out);
OSPCA_API ospca_status ospca_dataset_save(const ospca_dataset* dataset, const char* path);
OSPCA_API ospca_status ospca_dataset_shape(const ospca_dataset* dataset, int* nx, int* ny, int* count);
/* Copies sample `index` (flattened, length nx*ny) into buffer. */
OSPCA_API ospca_status ospca_dataset_sample(const ospca_dataset* dataset, int index, double* buffer, size_t len);
OSPCA_API void ospca_dataset_free(ospca_dataset* dataset);

/* --- spectral bases ------------------------------------------------------- */

/* Plain second-moment fit (no mean centering; see README). */
OSPCA_API ospca_status ospca_pca_fit(const ospca_dataset* dataset, ospca_basis** out);
/* Gradient-weighted fit under W = I + epsilon * J J^T. gradient has the
 * dataset's flattened length. epsilon == 0 degrades to ospca_pca_fit. */
OSPCA_API ospca_status ospca_gspca_fit(const ospca_dataset* dataset, const double* gradient, size_t len,
                                       double epsilon, ospca_basis** out);
OSPCA_API ospca_status ospca_basis_load(const char* path, ospca_basis** out);
/* gradient_filename names the side file for a gradient-weighted basis's J
 * vector (stored next to the basis file); pass NULL for Euclidean bases. */
OSPCA_API ospca_status ospca_basis_save(const ospca_basis* basis, const char* path, const char* gradient_filename);
OSPCA_API ospca_status ospca_basis_shape(const ospca_basis* basis, int* dim, int* rank);
/* Copies all rank spectrum entries into buffer. */
OSPCA_API ospca_status ospca_basis_sigma(const ospca_basis* basis, double* buffer, size_t len);
/* Copies component `index` (length dim) into buffer. */
OSPCA_API ospca_status ospca_basis_component(const ospca_basis* basis, int index, double* buffer, size_t len);
/* Smallest n whose leading spectral fraction reaches threshold. */
OSPCA_API ospca_status ospca_basis_select_dimension(const ospca_basis* basis, double threshold, int* out);
/* Projects vec onto the first n_kept components under the basis's metric.
 * coefficients (length n_kept) is required; reconstruction (length len) is
 * optional, pass NULL to skip it. */
OSPCA_API ospca_status ospca_basis_project(const ospca_basis* basis, const double* vec, size_t len, int n_kept,
                                           double* coefficients, double* reconstruction);
OSPCA_API void ospca_basis_free(ospca_basis* basis);

/* --- reservoir cases ------------------------------------------------------ */

/* Builds the configured five-spot case on an nx x ny grid. */
OSPCA_API ospca_status ospca_case_create(const ospca_config* config, int nx, int ny, ospca_case** out);
OSPCA_API ospca_status ospca_case_well_count(const ospca_case* rc, int* out);
/* Steady-state well rates (length = well count) for a flattened log(k) field. */
OSPCA_API ospca_status ospca_case_simulate(const ospca_case* rc, const double* field, size_t len, double* rates,
                                           size_t rates_len);
/* Installs reference rates; required before ospca_case_objective. */
OSPCA_API ospca_status ospca_case_set_observations(ospca_case* rc, const double* rates, size_t len);
/* Data mismatch |S(field) - S_obs|^2. */
OSPCA_API ospca_status ospca_case_objective(const ospca_case* rc, const double* field, size_t len, double* out);
OSPCA_API void ospca_case_free(ospca_case* rc);

/* --- pipeline stages ------------------------------------------------------ */

/* Each stage runs the deterministic experiment pipeline derived from the
 * config and writes its artifacts under the config's out.dir (see README for
 * the file inventory). Stages taking a report handle also return the full
 * score report; pass NULL to discard it. */
OSPCA_API ospca_status ospca_run_generate(const ospca_config* config);
OSPCA_API ospca_status ospca_run_pca(const ospca_config* config);
OSPCA_API ospca_status ospca_run_gspca(const ospca_config* config);
OSPCA_API ospca_status ospca_run_agspca(const ospca_config* config);
OSPCA_API ospca_status ospca_run_egspca(const ospca_config* config);
OSPCA_API ospca_status ospca_run_simulate(const ospca_config* config);
OSPCA_API ospca_status ospca_run_gradient(const ospca_config* config);
OSPCA_API ospca_status ospca_run_train_scores(const ospca_config* config, ospca_report** report);
OSPCA_API ospca_status ospca_run_test_scores(const ospca_config* config, ospca_report** report);
OSPCA_API ospca_status ospca_run_descend(const ospca_config* config);

/* JSON document mirroring the report's tables; owned by the report handle. */
OSPCA_API const char* ospca_report_json(const ospca_report* report);
OSPCA_API void ospca_report_free(ospca_report* report);

#ifdef __cplusplus
}
#endif

#endif /* OSPCA_H */
