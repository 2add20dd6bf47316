#include "koopid/identification.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "koopid/error.hpp"

namespace koopid {
namespace {

using json = nlohmann::json;

constexpr const char* kRemedy =
    "the fitted Koopman matrix has zero or negative real eigenvalues; more system measurements can "
    "be taken to resolve this";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  os << '[';
  bool first = true;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!first) os << ", ";
      first = false;
      os << num(m(r, c));
    }
  }
  os << ']';
}

Eigen::MatrixXd read_matrix(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw Error(ErrorCode::kSchemaError, std::string("model: matrix ") + name + " must hold " +
                                             std::to_string(rows * cols) + " numbers");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = j[static_cast<std::size_t>(r * cols + c)];
      if (!v.is_number()) throw Error(ErrorCode::kSchemaError, std::string("model: non-numeric entry in ") + name);
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const SpectrumError& e) {
    throw SpectrumError(e.code(), std::string("identify [") + name + "]: " + e.what(), e.offending(), e.spectrum());
  } catch (const Error& e) {
    throw Error(e.code(), std::string("identify [") + name + "]: " + e.what());
  }
}

}  // namespace

Eigen::VectorXd KoopmanModel::vector_field(const Eigen::Ref<const Eigen::VectorXd>& x,
                                           const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return field.transpose() * basis.lift(x, u);
}

void KoopmanModel::validate() const {
  const auto n_basis = static_cast<Eigen::Index>(basis.size());
  const auto n = static_cast<Eigen::Index>(basis.state_dim());
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvariantViolation, "model: " + what); };
  if (!(ts > 0.0) || !std::isfinite(ts)) fail("sampling period must be positive");
  if (koopman.rows() != n_basis || koopman.cols() != n_basis) fail("Koopman matrix has wrong shape");
  if (generator.rows() != n_basis || generator.cols() != n_basis) fail("generator has wrong shape");
  if (field.rows() != n_basis || field.cols() != n) fail("vector-field matrix has wrong shape");
  if (!koopman.allFinite() || !generator.allFinite() || !field.allFinite()) fail("non-finite entries");

  const double err = (matrix_exp(ts * generator) - koopman).norm() / koopman.norm();
  if (!(err <= 1e-8)) fail("exp(ts*A) differs from U (relative error " + num(err) + ")");

  const double scale = std::max(generator.cwiseAbs().maxCoeff(), 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd expected = generator * basis.identity_coefficients(static_cast<std::size_t>(i));
    if ((field.col(i) - expected).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      fail("field column " + std::to_string(i + 1) + " is not A applied to x" + std::to_string(i + 1));
    }
  }
}

Eigen::MatrixXd lifted_matrix(const MonomialBasis& basis, const Eigen::MatrixXd& states,
                              const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(states.cols()) != basis.state_dim() ||
      static_cast<std::size_t>(inputs.cols()) != basis.input_dim() || states.rows() != inputs.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "lift: data dimensions do not match the basis");
  }
  // Row-major so each lifted row is contiguous for lift_into.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> psi(
      states.rows(), static_cast<Eigen::Index>(basis.size()));
  std::vector<double> x(basis.state_dim()), u(basis.input_dim());
  for (Eigen::Index k = 0; k < states.rows(); ++k) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = states(k, static_cast<Eigen::Index>(j));
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = inputs(k, static_cast<Eigen::Index>(j));
    basis.lift_into(x, u, {psi.row(k).data(), basis.size()});
  }
  return psi;
}

KoopmanFit fit_koopman(const SnapshotSet& snapshots, const MonomialBasis& basis, double rcond) {
  if (snapshots.size() == 0) throw Error(ErrorCode::kEmptySnapshotSet, "fit: snapshot set is empty");
  if (snapshots.state_dim() != basis.state_dim() || snapshots.input_dim() != basis.input_dim() ||
      snapshots.y.rows() != snapshots.x.rows() || snapshots.u.rows() != snapshots.x.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "fit: snapshot dimensions do not match the basis");
  }
  const Eigen::MatrixXd psi_x = lifted_matrix(basis, snapshots.x, snapshots.u);
  const Eigen::MatrixXd psi_y = lifted_matrix(basis, snapshots.y, snapshots.u);
  LstsqResult ls = lstsq_detailed(psi_x, psi_y, rcond);
  KoopmanFit fit;
  fit.residual = (psi_x * ls.solution - psi_y).norm();
  fit.koopman = std::move(ls.solution);
  fit.rank = ls.rank;
  fit.condition = ls.condition;
  return fit;
}

Eigen::MatrixXd compute_generator(const Eigen::MatrixXd& koopman, double ts) {
  if (!(ts > 0.0)) throw Error(ErrorCode::kInvalidArgument, "generator: ts must be positive");
  try {
    return matrix_log(koopman) / ts;
  } catch (const SpectrumError& e) {
    std::vector<std::complex<double>> spectrum = e.spectrum();
    if (spectrum.empty()) spectrum = eigenvalues(koopman);
    throw SpectrumError(ErrorCode::kInsufficientData, std::string(kRemedy) + " (" + e.what() + ")",
                        e.offending(), std::move(spectrum));
  }
}

Eigen::MatrixXd extract_vector_field(const Eigen::MatrixXd& generator, const MonomialBasis& basis) {
  const auto n_basis = static_cast<Eigen::Index>(basis.size());
  if (generator.rows() != n_basis || generator.cols() != n_basis) {
    throw Error(ErrorCode::kDimensionMismatch, "extract: generator must be " + std::to_string(n_basis) +
                                                   "x" + std::to_string(n_basis));
  }
  Eigen::MatrixXd field(n_basis, static_cast<Eigen::Index>(basis.state_dim()));
  for (std::size_t i = 0; i < basis.state_dim(); ++i) {
    field.col(static_cast<Eigen::Index>(i)) = generator * basis.identity_coefficients(i);
  }
  return field;
}

PointwiseField evaluate_field_pointwise(const Eigen::MatrixXd& generator, const MonomialBasis& basis,
                                        const Eigen::Ref<const Eigen::VectorXd>& x,
                                        const Eigen::Ref<const Eigen::VectorXd>& u, double rcond) {
  const auto n_basis = static_cast<Eigen::Index>(basis.size());
  if (generator.rows() != n_basis || generator.cols() != n_basis) {
    throw Error(ErrorCode::kDimensionMismatch, "pointwise field: generator has wrong shape");
  }
  const Eigen::MatrixXd gradient = basis.lift_gradient(x, u);
  const Eigen::VectorXd rhs = generator.transpose() * basis.lift(x, u);
  LstsqResult ls = lstsq_detailed(gradient, rhs, rcond);
  PointwiseField out;
  out.value = ls.solution.col(0);
  out.rank_deficient = ls.rank < basis.state_dim();
  return out;
}

KoopmanModel identify(const SnapshotSet& snapshots, const MonomialBasis& basis, double rcond) {
  KoopmanFit fit = stage("fit", [&] { return fit_koopman(snapshots, basis, rcond); });
  Eigen::MatrixXd generator = stage("generator", [&] { return compute_generator(fit.koopman, snapshots.ts); });
  Eigen::MatrixXd field = stage("vector field", [&] { return extract_vector_field(generator, basis); });

  KoopmanModel model{basis, snapshots.ts, std::move(fit.koopman), std::move(generator), std::move(field), {}};
  model.meta.snapshots = snapshots.size();
  model.meta.residual = fit.residual;
  model.meta.rank = fit.rank;
  model.meta.condition = fit.condition;
  model.meta.created = utc_timestamp();
  double input_only = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto& e = basis.exponents()[k];
    bool has_state = false;
    for (std::size_t j = 0; j < basis.state_dim(); ++j) has_state = has_state || e[j] > 0;
    if (!has_state) input_only += model.generator.col(static_cast<Eigen::Index>(k)).squaredNorm();
  }
  model.meta.input_only_generator_norm = std::sqrt(input_only);
  model.meta.roundtrip_error =
      (matrix_exp(model.ts * model.generator) - model.koopman).norm() / model.koopman.norm();
  stage("validate", [&] {
    model.validate();
    return 0;
  });
  return model;
}

std::string model_to_json(const KoopmanModel& model) {
  std::ostringstream os;
  const MonomialBasis& b = model.basis;
  os << "{\n";
  os << "  \"format_version\": " << kModelFormatVersion << ",\n";
  os << "  \"n\": " << b.state_dim() << ",\n";
  os << "  \"m\": " << b.input_dim() << ",\n";
  os << "  \"w\": " << b.max_degree() << ",\n";
  os << "  \"ts\": " << num(model.ts) << ",\n";
  os << "  \"basis\": {\"exponents\": [";
  for (std::size_t k = 0; k < b.size(); ++k) {
    os << (k ? ", " : "") << '[';
    for (std::size_t j = 0; j < b.exponents()[k].size(); ++j) os << (j ? ", " : "") << b.exponents()[k][j];
    os << ']';
  }
  os << "]},\n";
  os << "  \"matrices\": {\n    \"U\": ";
  write_matrix(os, model.koopman);
  os << ",\n    \"A\": ";
  write_matrix(os, model.generator);
  os << ",\n    \"W\": ";
  write_matrix(os, model.field);
  os << "\n  },\n";
  const ModelMeta& meta = model.meta;
  os << "  \"meta\": {\"k\": " << meta.snapshots << ", \"residual\": " << num(meta.residual)
     << ", \"rank\": " << meta.rank << ", \"seed\": " << meta.seed << ", \"created\": "
     << json(meta.created).dump() << ", \"condition\": " << num(meta.condition)
     << ", \"input_only_generator_norm\": " << num(meta.input_only_generator_norm)
     << ", \"roundtrip_error\": " << num(meta.roundtrip_error) << "}\n";
  os << "}\n";
  return os.str();
}

KoopmanModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("model: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kSchemaError, "model: unsupported format_version");
    }
    const auto n = doc.at("n").get<std::size_t>();
    const auto m = doc.at("m").get<std::size_t>();
    const auto w = doc.at("w").get<std::size_t>();
    const auto exponents = doc.at("basis").at("exponents").get<std::vector<std::vector<int>>>();
    MonomialBasis basis = MonomialBasis::from_exponents(n, m, w, exponents);
    const auto nb = static_cast<Eigen::Index>(basis.size());
    const json& mats = doc.at("matrices");
    KoopmanModel model{basis,
                       doc.at("ts").get<double>(),
                       read_matrix(mats.at("U"), nb, nb, "U"),
                       read_matrix(mats.at("A"), nb, nb, "A"),
                       read_matrix(mats.at("W"), nb, static_cast<Eigen::Index>(n), "W"),
                       {}};
    const json& meta = doc.at("meta");
    model.meta.snapshots = meta.at("k").get<std::size_t>();
    model.meta.residual = meta.at("residual").get<double>();
    model.meta.rank = meta.at("rank").get<std::size_t>();
    model.meta.seed = meta.at("seed").get<std::uint64_t>();
    model.meta.created = meta.at("created").get<std::string>();
    model.meta.condition = meta.value("condition", 0.0);
    model.meta.input_only_generator_norm = meta.value("input_only_generator_norm", 0.0);
    model.meta.roundtrip_error = meta.value("roundtrip_error", 0.0);
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("model: ") + e.what());
  }
}

void save_model(const KoopmanModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << model_to_json(model);
}

KoopmanModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, path.string() + ": cannot open model file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace koopid
