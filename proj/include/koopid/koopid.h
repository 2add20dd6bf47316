/*
 * koopid C API.
 *
 * Objects are opaque handles created by *_create / *_load / koopid_identify
 * and released with the matching *_destroy. Every fallible call returns a
 * koopid_status; on failure the thread-local koopid_last_error() message and
 * koopid_last_error_kind() name describe the cause. Matrices cross the
 * boundary as row-major double arrays.
 */
#ifndef KOOPID_H
#define KOOPID_H

#include <stddef.h>
#include <stdint.h>

#if defined(KOOPID_BUILDING_LIBRARY)
#define KOOPID_API __attribute__((visibility("default")))
#else
#define KOOPID_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 2..4 double as the CLI exit codes. */
typedef enum koopid_status {
  KOOPID_OK = 0,
  KOOPID_ERROR_CONFIG = 2,
  KOOPID_ERROR_DATA = 3,
  KOOPID_ERROR_NUMERICAL = 4,
  KOOPID_ERROR_INVALID_HANDLE = 5,
  KOOPID_ERROR_BUFFER_TOO_SMALL = 6,
  KOOPID_ERROR_INTERNAL = 7
} koopid_status;

typedef enum koopid_log_level {
  KOOPID_LOG_INFO = 0,
  KOOPID_LOG_DETAIL = 1,
  KOOPID_LOG_WARNING = 2
} koopid_log_level;

typedef enum koopid_matrix {
  KOOPID_MATRIX_KOOPMAN = 0,   /* N x N */
  KOOPID_MATRIX_GENERATOR = 1, /* N x N */
  KOOPID_MATRIX_FIELD = 2      /* N x n */
} koopid_matrix;

typedef struct koopid_basis koopid_basis;
typedef struct koopid_model koopid_model;

typedef void (*koopid_log_fn)(koopid_log_level level, const char* line, void* user);

KOOPID_API const char* koopid_version(void);

/* Diagnostics of the most recent failure on the calling thread. */
KOOPID_API const char* koopid_last_error(void);
KOOPID_API const char* koopid_last_error_kind(void);
/* Eigenvalues attached to an InsufficientData / NonPrincipalBranch failure.
 * Copies up to `capacity` values and returns the total count available. */
KOOPID_API size_t koopid_last_error_eigenvalues(double* re, double* im, size_t capacity);

/* ---- monomial basis ---------------------------------------------------- */

KOOPID_API koopid_status koopid_basis_create(size_t n, size_t m, size_t w, koopid_basis** out);
KOOPID_API void koopid_basis_destroy(koopid_basis* basis);
KOOPID_API size_t koopid_basis_size(const koopid_basis* basis);
/* N x (n + m) exponent table, row-major. */
KOOPID_API koopid_status koopid_basis_exponents(const koopid_basis* basis, int* out, size_t capacity);
KOOPID_API koopid_status koopid_basis_lift(const koopid_basis* basis, const double* x, size_t n, const double* u,
                                           size_t m, double* out, size_t capacity);
/* N x n Jacobian, row-major. */
KOOPID_API koopid_status koopid_basis_lift_gradient(const koopid_basis* basis, const double* x, size_t n,
                                                    const double* u, size_t m, double* out, size_t capacity);

/* ---- identified models ------------------------------------------------- */

/* Snapshot arrays are row-major: x and y are k x n, u is k x m. */
KOOPID_API koopid_status koopid_identify(const double* x, const double* u, const double* y, size_t k, size_t n,
                                         size_t m, size_t w, double ts, double rcond, koopid_model** out);
KOOPID_API koopid_status koopid_model_load(const char* path, koopid_model** out);
KOOPID_API koopid_status koopid_model_save(const koopid_model* model, const char* path);
KOOPID_API void koopid_model_destroy(koopid_model* model);
KOOPID_API koopid_status koopid_model_dims(const koopid_model* model, size_t* n, size_t* m, size_t* w,
                                           size_t* basis_size);
KOOPID_API koopid_status koopid_model_ts(const koopid_model* model, double* ts);
KOOPID_API koopid_status koopid_model_matrix(const koopid_model* model, koopid_matrix which, double* out,
                                             size_t capacity);
/* F(x, u) = W^T psi(x, u); out has n entries. */
KOOPID_API koopid_status koopid_model_vector_field(const koopid_model* model, const double* x, const double* u,
                                                   double* out);
/* Pointwise least-squares field; *rank_deficient (optional) flags a rank-deficient gradient. */
KOOPID_API koopid_status koopid_model_vector_field_pointwise(const koopid_model* model, const double* x,
                                                             const double* u, double rcond, double* out,
                                                             int* rank_deficient);
/* inputs: samples x m ZOH inputs at the model ts; states_out: samples x n. */
KOOPID_API koopid_status koopid_model_simulate(const koopid_model* model, const double* x0, const double* inputs,
                                               size_t samples, double step, double* states_out);

/* ---- dense kernels (n x n, row-major) ----------------------------------- */

KOOPID_API koopid_status koopid_matrix_exp(const double* in, size_t n, double* out);
KOOPID_API koopid_status koopid_matrix_log(const double* in, size_t n, double* out);

/* ---- commands (config is a JSON document) ------------------------------- */

KOOPID_API koopid_status koopid_cmd_generate(const char* config_json, koopid_log_fn log, void* user);
KOOPID_API koopid_status koopid_cmd_identify(const char* config_json, const char* const* data_paths,
                                             size_t data_count, koopid_log_fn log, void* user);
KOOPID_API koopid_status koopid_cmd_evaluate(const char* config_json, const char* const* model_paths,
                                             size_t model_count, const char* const* data_paths,
                                             size_t data_count, koopid_log_fn log, void* user);
/* out_path may be NULL to skip writing files. */
KOOPID_API koopid_status koopid_cmd_compare(const char* const* report_paths, size_t report_count,
                                            const char* out_path, koopid_log_fn log, void* user);
KOOPID_API koopid_status koopid_cmd_pipeline(const char* config_json, koopid_log_fn log, void* user);

#ifdef __cplusplus
}
#endif

#endif /* KOOPID_H */
