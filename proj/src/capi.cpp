#include "koopid/koopid.h"

#include <complex>
#include <exception>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "koopid/basis.hpp"
#include "koopid/config.hpp"
#include "koopid/error.hpp"
#include "koopid/identification.hpp"
#include "koopid/numerics.hpp"
#include "koopid/pipeline.hpp"
#include "koopid/simulator.hpp"

struct koopid_basis {
  koopid::MonomialBasis impl;
};

struct koopid_model {
  koopid::KoopmanModel impl;
};

namespace {

struct LastError {
  std::string message;
  std::string kind;
  std::vector<std::complex<double>> eigenvalues;
};

thread_local LastError g_last_error;

koopid_status fail(koopid_status status, std::string kind, std::string message,
                   std::vector<std::complex<double>> eigenvalues = {}) {
  g_last_error = {std::move(message), std::move(kind), std::move(eigenvalues)};
  return status;
}

koopid_status status_for(koopid::ErrorCode code) {
  switch (koopid::error_category(code)) {
    case koopid::ErrorCategory::kConfig: return KOOPID_ERROR_CONFIG;
    case koopid::ErrorCategory::kData: return KOOPID_ERROR_DATA;
    case koopid::ErrorCategory::kNumerical: return KOOPID_ERROR_NUMERICAL;
  }
  return KOOPID_ERROR_INTERNAL;
}

// Runs `fn`, translating every exception into a status code.
template <typename Fn>
koopid_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error = {};
    return KOOPID_OK;
  } catch (const koopid::SpectrumError& e) {
    return fail(status_for(e.code()), std::string(koopid::error_code_name(e.code())), e.what(), e.spectrum());
  } catch (const koopid::Error& e) {
    return fail(status_for(e.code()), std::string(koopid::error_code_name(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(KOOPID_ERROR_INTERNAL, "OutOfMemory", "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(KOOPID_ERROR_DATA, "IoError", e.what());
  } catch (const std::exception& e) {
    return fail(KOOPID_ERROR_INTERNAL, "Internal", e.what());
  }
}

koopid_status null_handle(const char* what) {
  return fail(KOOPID_ERROR_INVALID_HANDLE, "InvalidHandle", std::string(what) + " is NULL");
}

koopid_status too_small(std::size_t need) {
  return fail(KOOPID_ERROR_BUFFER_TOO_SMALL, "BufferTooSmall",
              "output buffer needs " + std::to_string(need) + " entries");
}

void copy_row_major(const Eigen::MatrixXd& m, double* out) {
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, m.rows(), m.cols()) = m;
}

Eigen::MatrixXd from_row_major(const double* data, std::size_t rows, std::size_t cols) {
  if (rows * cols == 0) return Eigen::MatrixXd(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Eigen::VectorXd vec(const double* data, std::size_t len) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(len));
  for (std::size_t i = 0; i < len; ++i) v[static_cast<Eigen::Index>(i)] = data[i];
  return v;
}

koopid::LogSink make_sink(koopid_log_fn log, void* user) {
  return [log, user](koopid::LogLevel level, const std::string& line) {
    if (log) log(static_cast<koopid_log_level>(level), line.c_str(), user);
  };
}

std::vector<std::filesystem::path> paths(const char* const* items, std::size_t count) {
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (!items || !items[i]) throw koopid::Error(koopid::ErrorCode::kInvalidArgument, "path list contains NULL");
    out.emplace_back(items[i]);
  }
  return out;
}

koopid::RunConfig config_from(const char* text) {
  if (!text) throw koopid::Error(koopid::ErrorCode::kConfigError, "config: document is NULL");
  return koopid::parse_config(text);
}

}  // namespace

extern "C" {

const char* koopid_version(void) { return "0.1.0"; }

const char* koopid_last_error(void) { return g_last_error.message.c_str(); }

const char* koopid_last_error_kind(void) { return g_last_error.kind.c_str(); }

size_t koopid_last_error_eigenvalues(double* re, double* im, size_t capacity) {
  const auto& eig = g_last_error.eigenvalues;
  for (std::size_t i = 0; i < eig.size() && i < capacity; ++i) {
    if (re) re[i] = eig[i].real();
    if (im) im[i] = eig[i].imag();
  }
  return eig.size();
}

koopid_status koopid_basis_create(size_t n, size_t m, size_t w, koopid_basis** out) {
  if (!out) return null_handle("out");
  *out = nullptr;
  return guarded([&] { *out = new koopid_basis{koopid::MonomialBasis(n, m, w)}; });
}

void koopid_basis_destroy(koopid_basis* basis) { delete basis; }

size_t koopid_basis_size(const koopid_basis* basis) { return basis ? basis->impl.size() : 0; }

koopid_status koopid_basis_exponents(const koopid_basis* basis, int* out, size_t capacity) {
  if (!basis) return null_handle("basis");
  const auto& b = basis->impl;
  const std::size_t vars = b.state_dim() + b.input_dim();
  if (!out || capacity < b.size() * vars) return too_small(b.size() * vars);
  for (std::size_t k = 0; k < b.size(); ++k) {
    for (std::size_t j = 0; j < vars; ++j) out[k * vars + j] = b.exponents()[k][j];
  }
  return KOOPID_OK;
}

koopid_status koopid_basis_lift(const koopid_basis* basis, const double* x, size_t n, const double* u, size_t m,
                                double* out, size_t capacity) {
  if (!basis) return null_handle("basis");
  if (!out || capacity < basis->impl.size()) return too_small(basis->impl.size());
  return guarded([&] {
    basis->impl.lift_into({x, n}, {u, m}, {out, basis->impl.size()});
  });
}

koopid_status koopid_basis_lift_gradient(const koopid_basis* basis, const double* x, size_t n, const double* u,
                                         size_t m, double* out, size_t capacity) {
  if (!basis) return null_handle("basis");
  const std::size_t need = basis->impl.size() * basis->impl.state_dim();
  if (!out || capacity < need) return too_small(need);
  return guarded([&] { copy_row_major(basis->impl.lift_gradient(vec(x, n), vec(u, m)), out); });
}

koopid_status koopid_identify(const double* x, const double* u, const double* y, size_t k, size_t n, size_t m,
                              size_t w, double ts, double rcond, koopid_model** out) {
  if (!out) return null_handle("out");
  *out = nullptr;
  return guarded([&] {
    if (k > 0 && (!x || !y || (m > 0 && !u))) {
      throw koopid::Error(koopid::ErrorCode::kInvalidArgument, "identify: snapshot array is NULL");
    }
    koopid::SnapshotSet set;
    set.x = from_row_major(x, k, n);
    set.u = from_row_major(u, k, m);
    set.y = from_row_major(y, k, n);
    set.ts = ts;
    const koopid::MonomialBasis basis(n, m, w);
    *out = new koopid_model{koopid::identify(set, basis, rcond)};
  });
}

koopid_status koopid_model_load(const char* path, koopid_model** out) {
  if (!out) return null_handle("out");
  if (!path) return null_handle("path");
  *out = nullptr;
  return guarded([&] { *out = new koopid_model{koopid::load_model(path)}; });
}

koopid_status koopid_model_save(const koopid_model* model, const char* path) {
  if (!model) return null_handle("model");
  if (!path) return null_handle("path");
  return guarded([&] { koopid::save_model(model->impl, path); });
}

void koopid_model_destroy(koopid_model* model) { delete model; }

koopid_status koopid_model_dims(const koopid_model* model, size_t* n, size_t* m, size_t* w, size_t* basis_size) {
  if (!model) return null_handle("model");
  const auto& b = model->impl.basis;
  if (n) *n = b.state_dim();
  if (m) *m = b.input_dim();
  if (w) *w = b.max_degree();
  if (basis_size) *basis_size = b.size();
  return KOOPID_OK;
}

koopid_status koopid_model_ts(const koopid_model* model, double* ts) {
  if (!model) return null_handle("model");
  if (!ts) return null_handle("ts");
  *ts = model->impl.ts;
  return KOOPID_OK;
}

koopid_status koopid_model_matrix(const koopid_model* model, koopid_matrix which, double* out, size_t capacity) {
  if (!model) return null_handle("model");
  const Eigen::MatrixXd* m = nullptr;
  switch (which) {
    case KOOPID_MATRIX_KOOPMAN: m = &model->impl.koopman; break;
    case KOOPID_MATRIX_GENERATOR: m = &model->impl.generator; break;
    case KOOPID_MATRIX_FIELD: m = &model->impl.field; break;
    default: return fail(KOOPID_ERROR_CONFIG, "InvalidArgument", "unknown matrix selector");
  }
  const auto need = static_cast<std::size_t>(m->size());
  if (!out || capacity < need) return too_small(need);
  copy_row_major(*m, out);
  return KOOPID_OK;
}

koopid_status koopid_model_vector_field(const koopid_model* model, const double* x, const double* u, double* out) {
  if (!model) return null_handle("model");
  if (!x || !out) return null_handle("x/out");
  return guarded([&] {
    const Eigen::VectorXd f = model->impl.vector_field(vec(x, model->impl.state_dim()), vec(u, model->impl.input_dim()));
    for (Eigen::Index i = 0; i < f.size(); ++i) out[i] = f[i];
  });
}

koopid_status koopid_model_vector_field_pointwise(const koopid_model* model, const double* x, const double* u,
                                                  double rcond, double* out, int* rank_deficient) {
  if (!model) return null_handle("model");
  if (!x || !out) return null_handle("x/out");
  return guarded([&] {
    const auto r = koopid::evaluate_field_pointwise(model->impl.generator, model->impl.basis,
                                                    vec(x, model->impl.state_dim()), vec(u, model->impl.input_dim()),
                                                    rcond);
    for (Eigen::Index i = 0; i < r.value.size(); ++i) out[i] = r.value[i];
    if (rank_deficient) *rank_deficient = r.rank_deficient ? 1 : 0;
  });
}

koopid_status koopid_model_simulate(const koopid_model* model, const double* x0, const double* inputs,
                                    size_t samples, double step, double* states_out) {
  if (!model) return null_handle("model");
  if (!x0 || !states_out) return null_handle("x0/states_out");
  return guarded([&] {
    const auto& mdl = model->impl;
    const Eigen::MatrixXd u = from_row_major(inputs, samples, mdl.input_dim());
    const koopid::Trajectory traj = koopid::simulate_model(mdl, vec(x0, mdl.state_dim()), u, koopid::OdeConfig{step});
    copy_row_major(traj.states, states_out);
  });
}

koopid_status koopid_matrix_exp(const double* in, size_t n, double* out) {
  if (!in || !out) return null_handle("in/out");
  return guarded([&] { copy_row_major(koopid::matrix_exp(from_row_major(in, n, n)), out); });
}

koopid_status koopid_matrix_log(const double* in, size_t n, double* out) {
  if (!in || !out) return null_handle("in/out");
  return guarded([&] { copy_row_major(koopid::matrix_log(from_row_major(in, n, n)), out); });
}

koopid_status koopid_cmd_generate(const char* config_json, koopid_log_fn log, void* user) {
  return guarded([&] { koopid::run_generate(config_from(config_json), make_sink(log, user)); });
}

koopid_status koopid_cmd_identify(const char* config_json, const char* const* data_paths, size_t data_count,
                                  koopid_log_fn log, void* user) {
  return guarded([&] {
    koopid::run_identify(config_from(config_json), paths(data_paths, data_count), make_sink(log, user));
  });
}

koopid_status koopid_cmd_evaluate(const char* config_json, const char* const* model_paths, size_t model_count,
                                  const char* const* data_paths, size_t data_count, koopid_log_fn log, void* user) {
  return guarded([&] {
    koopid::run_evaluate(config_from(config_json), paths(model_paths, model_count), paths(data_paths, data_count),
                         make_sink(log, user));
  });
}

koopid_status koopid_cmd_compare(const char* const* report_paths, size_t report_count, const char* out_path,
                                 koopid_log_fn log, void* user) {
  return guarded([&] {
    koopid::run_compare(paths(report_paths, report_count), out_path ? std::filesystem::path(out_path) : std::filesystem::path(),
                        make_sink(log, user));
  });
}

koopid_status koopid_cmd_pipeline(const char* config_json, koopid_log_fn log, void* user) {
  return guarded([&] { koopid::run_pipeline(config_from(config_json), make_sink(log, user)); });
}

}  // extern "C"
