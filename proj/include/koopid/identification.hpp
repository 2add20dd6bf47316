#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "koopid/basis.hpp"
#include "koopid/dataset.hpp"
#include "koopid/numerics.hpp"

namespace koopid {

inline constexpr int kModelFormatVersion = 1;

struct ModelMeta {
  std::size_t snapshots = 0;
  double residual = 0.0;  // ||Psi_x U - Psi_y||_F
  std::size_t rank = 0;   // numerical rank of Psi_x
  double condition = 0.0;
  std::uint64_t seed = 0;
  std::string created;
  /// Frobenius norm of the generator columns belonging to input-only
  /// monomials; these observables are constant along flows, so the true
  /// value is zero.
  double input_only_generator_norm = 0.0;
  /// ||exp(ts A) - U||_F / ||U||_F
  double roundtrip_error = 0.0;
};

/// Identified model. `koopman` and `generator` act on coefficient vectors:
/// if alpha represents f, then koopman * alpha represents f o flow^ts.
/// Column i of `field` holds the basis coefficients of the i-th component
/// of the vector field, so F(x, u) = field^T psi(x, u).
struct KoopmanModel {
  MonomialBasis basis;
  double ts = 0.0;
  Eigen::MatrixXd koopman;    // N x N
  Eigen::MatrixXd generator;  // N x N
  Eigen::MatrixXd field;      // N x n
  ModelMeta meta;

  std::size_t state_dim() const { return basis.state_dim(); }
  std::size_t input_dim() const { return basis.input_dim(); }

  Eigen::VectorXd vector_field(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& u) const;

  /// Checks dimensions, finiteness, exp(ts A) ~ U to 1e-8 relative, and
  /// that each field column equals A times the matching identity
  /// coefficients. Throws Error(kInvariantViolation).
  void validate() const;
};

struct KoopmanFit {
  Eigen::MatrixXd koopman;
  double residual = 0.0;
  std::size_t rank = 0;
  double condition = 0.0;
};

/// Rows psi(states_k, inputs_k)^T.
Eigen::MatrixXd lifted_matrix(const MonomialBasis& basis, const Eigen::MatrixXd& states,
                              const Eigen::MatrixXd& inputs);

/// U = Psi_x^+ Psi_y.
KoopmanFit fit_koopman(const SnapshotSet& snapshots, const MonomialBasis& basis,
                       double rcond = kDefaultRcond);

/// A = log(U) / ts. A missing real principal logarithm is reported as
/// SpectrumError(kInsufficientData) carrying the eigenvalues of U.
Eigen::MatrixXd compute_generator(const Eigen::MatrixXd& koopman, double ts);

/// Column i = A * identity_coefficients(i).
Eigen::MatrixXd extract_vector_field(const Eigen::MatrixXd& generator, const MonomialBasis& basis);

struct PointwiseField {
  Eigen::VectorXd value;
  bool rank_deficient = false;
};

/// Least-squares solution F of A^T psi(x, u) = (d psi / d x) F at one point.
/// A rank-deficient gradient is flagged, and the minimum-norm solution is returned.
PointwiseField evaluate_field_pointwise(const Eigen::MatrixXd& generator, const MonomialBasis& basis,
                                        const Eigen::Ref<const Eigen::VectorXd>& x,
                                        const Eigen::Ref<const Eigen::VectorXd>& u,
                                        double rcond = kDefaultRcond);

/// fit_koopman -> compute_generator -> extract_vector_field, then validate.
KoopmanModel identify(const SnapshotSet& snapshots, const MonomialBasis& basis,
                      double rcond = kDefaultRcond);

std::string model_to_json(const KoopmanModel& model);
KoopmanModel model_from_json(const std::string& text);
void save_model(const KoopmanModel& model, const std::filesystem::path& path);
KoopmanModel load_model(const std::filesystem::path& path);

}  // namespace koopid
