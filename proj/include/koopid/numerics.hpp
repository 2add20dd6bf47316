#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace koopid {

inline constexpr double kDefaultRcond = 1e-12;

struct SvdResult {
  Eigen::MatrixXd u;                // rows x r, orthonormal columns
  Eigen::VectorXd singular_values;  // descending, >= 0
  Eigen::MatrixXd v;                // cols x r, orthonormal columns
};

/// Thin SVD, r = min(rows, cols). Throws Error(kNonFiniteInput).
SvdResult svd(const Eigen::MatrixXd& m);

/// Singular values at or below rcond * sigma_max * max(rows, cols) are dropped.
double truncation_threshold(const SvdResult& s, Eigen::Index rows, Eigen::Index cols, double rcond);
std::size_t numerical_rank(const SvdResult& s, Eigen::Index rows, Eigen::Index cols, double rcond);

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& m, double rcond = kDefaultRcond);

struct LstsqResult {
  Eigen::MatrixXd solution;
  std::size_t rank = 0;
  double condition = 0.0;  // sigma_max / smallest retained sigma
};

/// Minimum-norm least-squares solution of A X = B, computed as A^+ B
/// without forming A^+ explicitly.
LstsqResult lstsq_detailed(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double rcond = kDefaultRcond);
Eigen::MatrixXd lstsq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      double rcond = kDefaultRcond);

/// Scaling and squaring with a [13/13] Pade approximant.
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& m);

/// Real principal logarithm.
///
/// Complex Schur form, repeated triangular square roots until the factor is
/// within 0.25 of the identity, then an 8-point Gauss-Legendre (Pade)
/// evaluation of log(I + X). Throws SpectrumError(kNonPrincipalBranch) if
/// an eigenvalue is zero or lies on the negative real axis, or if the result
/// carries a non-negligible imaginary part.
Eigen::MatrixXd matrix_log(const Eigen::MatrixXd& m);

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& m);

}  // namespace koopid
