#include "koopid/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "koopid/error.hpp"

namespace koopid {
namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::kNonFiniteInput, std::string(what) + ": input has non-finite entries");
}

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kNotSquare, std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                                           std::to_string(m.cols()));
  }
}

// Nodes and weights of the m-point Gauss-Legendre rule on [0, 1]
// (Golub-Welsch on the Legendre Jacobi matrix).
template <int M>
struct GaussLegendre {
  std::array<double, M> nodes;
  std::array<double, M> weights;

  GaussLegendre() {
    Eigen::Matrix<double, M, M> jacobi = Eigen::Matrix<double, M, M>::Zero();
    for (int k = 1; k < M; ++k) {
      const double beta = k / std::sqrt(4.0 * k * k - 1.0);
      jacobi(k, k - 1) = beta;
      jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, M, M>> eig(jacobi);
    for (int j = 0; j < M; ++j) {
      nodes[j] = 0.5 * (1.0 + eig.eigenvalues()[j]);
      const double v0 = eig.eigenvectors()(0, j);
      weights[j] = v0 * v0;
    }
  }
};

using ComplexMatrix = Eigen::MatrixXcd;

// Principal square root of an upper-triangular matrix (Bjorck-Hammarling).
ComplexMatrix sqrt_upper_triangular(const ComplexMatrix& t) {
  const Eigen::Index n = t.rows();
  ComplexMatrix r = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r(j, j) = std::sqrt(t(j, j));
    for (Eigen::Index i = j - 1; i >= 0; --i) {
      std::complex<double> s = t(i, j);
      for (Eigen::Index k = i + 1; k < j; ++k) s -= r(i, k) * r(k, j);
      r(i, j) = s / (r(i, i) + r(j, j));
    }
  }
  return r;
}

double one_norm(const ComplexMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

std::string describe(const std::vector<std::complex<double>>& values) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << values[i].real();
    if (values[i].imag() != 0.0) os << (values[i].imag() < 0 ? "-" : "+") << std::abs(values[i].imag()) << "i";
  }
  return os.str();
}

}  // namespace

SvdResult svd(const Eigen::MatrixXd& m) {
  require_finite(m, "svd");
  SvdResult out;
  if (m.size() == 0) {
    out.u = Eigen::MatrixXd(m.rows(), 0);
    out.v = Eigen::MatrixXd(m.cols(), 0);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd, Eigen::ColPivHouseholderQRPreconditioner> solver(
      m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = solver.matrixU();
  out.singular_values = solver.singularValues();
  out.v = solver.matrixV();
  return out;
}

double truncation_threshold(const SvdResult& s, Eigen::Index rows, Eigen::Index cols, double rcond) {
  if (s.singular_values.size() == 0) return 0.0;
  return rcond * s.singular_values[0] * static_cast<double>(std::max(rows, cols));
}

std::size_t numerical_rank(const SvdResult& s, Eigen::Index rows, Eigen::Index cols, double rcond) {
  const double cut = truncation_threshold(s, rows, cols, rcond);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
    if (s.singular_values[i] > cut) ++rank;
  }
  return rank;
}

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& m, double rcond) {
  if (!(rcond >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "pseudoinverse: rcond must be >= 0");
  const SvdResult s = svd(m);
  const std::size_t rank = numerical_rank(s, m.rows(), m.cols(), rcond);
  const auto r = static_cast<Eigen::Index>(rank);
  Eigen::MatrixXd pinv = s.v.leftCols(r) * s.singular_values.head(r).cwiseInverse().asDiagonal() *
                         s.u.leftCols(r).transpose();
  return pinv;
}

LstsqResult lstsq_detailed(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rcond) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "lstsq: A has " + std::to_string(a.rows()) + " rows, B has " +
                                                   std::to_string(b.rows()));
  }
  if (!(rcond >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lstsq: rcond must be >= 0");
  require_finite(b, "lstsq");
  const SvdResult s = svd(a);
  LstsqResult out;
  out.rank = numerical_rank(s, a.rows(), a.cols(), rcond);
  const auto r = static_cast<Eigen::Index>(out.rank);
  out.condition = r > 0 ? s.singular_values[0] / s.singular_values[r - 1]
                        : std::numeric_limits<double>::infinity();
  out.solution = s.v.leftCols(r) *
                 (s.singular_values.head(r).cwiseInverse().asDiagonal() * (s.u.leftCols(r).transpose() * b));
  return out;
}

Eigen::MatrixXd lstsq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rcond) {
  return lstsq_detailed(a, b, rcond).solution;
}

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& m) {
  require_square(m, "matrix_exp");
  require_finite(m, "matrix_exp");
  const Eigen::Index n = m.rows();
  if (n == 0) return m;

  // Higham (2005) degree-13 coefficients and the matching 1-norm bound.
  constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  const Eigen::MatrixXd a = m / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  const Eigen::MatrixXd odd =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Eigen::MatrixXd even =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  Eigen::MatrixXd r = (even - odd).partialPivLu().solve(even + odd);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& m) {
  require_square(m, "eigenvalues");
  require_finite(m, "eigenvalues");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  std::vector<std::complex<double>> out(solver.eigenvalues().data(),
                                        solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(out.begin(), out.end(), [](auto x, auto y) {
    return std::abs(x) != std::abs(y) ? std::abs(x) > std::abs(y) : x.imag() > y.imag();
  });
  return out;
}

Eigen::MatrixXd matrix_log(const Eigen::MatrixXd& m) {
  require_square(m, "matrix_log");
  require_finite(m, "matrix_log");
  const Eigen::Index n = m.rows();
  if (n == 0) return m;

  Eigen::ComplexSchur<ComplexMatrix> schur(m.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::kNonFiniteInput, "matrix_log: Schur decomposition did not converge");
  }
  ComplexMatrix t = schur.matrixT();
  const ComplexMatrix& q = schur.matrixU();

  std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> offending;
  const double scale = std::max(m.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = t(i, i);
    spectrum[static_cast<std::size_t>(i)] = lambda;
    const bool zero = std::abs(lambda) <= static_cast<double>(n) * 1e-15 * scale;
    const bool negative_real = lambda.real() < 0.0 && std::abs(lambda.imag()) <= 1e-10 * std::abs(lambda);
    if (zero || negative_real) offending.push_back(lambda);
  }
  if (!offending.empty()) {
    throw SpectrumError(ErrorCode::kNonPrincipalBranch,
                        "matrix_log: no real principal logarithm; eigenvalues on the closed negative real "
                        "axis: " + describe(offending),
                        offending, spectrum);
  }

  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  int roots = 0;
  while (one_norm(t - id) > 0.25) {
    if (roots == 200) throw Error(ErrorCode::kNonPrincipalBranch, "matrix_log: square-root phase did not converge");
    t = sqrt_upper_triangular(t);
    ++roots;
  }

  static const GaussLegendre<8> rule;
  const ComplexMatrix x = t - id;
  ComplexMatrix log_t = ComplexMatrix::Zero(n, n);
  for (int j = 0; j < 8; ++j) {
    const ComplexMatrix shifted = id + rule.nodes[j] * x;
    log_t += rule.weights[j] * shifted.triangularView<Eigen::Upper>().solve(x);
  }
  log_t *= std::ldexp(1.0, roots);

  const ComplexMatrix result = q * log_t * q.adjoint();
  const double real_norm = result.real().norm();
  const double imag_norm = result.imag().norm();
  if (imag_norm > 1e-8 * std::max(real_norm, 1.0)) {
    throw SpectrumError(ErrorCode::kNonPrincipalBranch,
                        "matrix_log: principal logarithm is not real (imaginary norm " +
                            std::to_string(imag_norm) + ")",
                        {}, spectrum);
  }
  return result.real();
}

}  // namespace koopid
