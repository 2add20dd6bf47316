#include "koopid/basis.hpp"

#include <algorithm>
#include <string>

#include "koopid/error.hpp"

namespace koopid {
namespace {

// Appends every tuple of `vars` non-negative entries summing to `degree`,
// in descending lexicographic order.
void enumerate_degree(std::size_t vars, int degree, std::vector<int>& prefix,
                      std::vector<MonomialBasis::Exponents>& out) {
  if (prefix.size() + 1 == vars) {
    prefix.push_back(degree);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int e = degree; e >= 0; --e) {
    prefix.push_back(e);
    enumerate_degree(vars, degree - e, prefix, out);
    prefix.pop_back();
  }
}

inline double ipow(double v, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= v;
  return r;
}

}  // namespace

MonomialBasis::MonomialBasis(std::size_t n, std::size_t m, std::size_t w) : n_(n), m_(m), w_(w) {
  if (n == 0) throw Error(ErrorCode::kInvalidDimension, "basis: state dimension must be >= 1");
  if (w == 0) throw Error(ErrorCode::kInvalidDimension, "basis: maximum degree must be >= 1");
  const std::size_t vars = n + m;
  exponents_.reserve(cardinality(n, m, w));
  std::vector<int> prefix;
  prefix.reserve(vars);
  for (std::size_t d = 0; d <= w; ++d) enumerate_degree(vars, static_cast<int>(d), prefix, exponents_);

  identity_index_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Degree-one block follows the constant; descending lex puts x_1 first.
    identity_index_[i] = 1 + i;
  }
}

MonomialBasis MonomialBasis::from_exponents(std::size_t n, std::size_t m, std::size_t w,
                                            const std::vector<Exponents>& exponents) {
  MonomialBasis basis(n, m, w);
  if (basis.exponents_ != exponents) {
    throw Error(ErrorCode::kSchemaError,
                "basis: stored exponents do not match the canonical ordering for (n=" +
                    std::to_string(n) + ", m=" + std::to_string(m) + ", w=" + std::to_string(w) + ")");
  }
  return basis;
}

std::size_t MonomialBasis::cardinality(std::size_t n, std::size_t m, std::size_t w) {
  // C(n+m+w, w) evaluated incrementally; every partial product is an integer.
  std::size_t result = 1;
  const std::size_t vars = n + m;
  for (std::size_t k = 1; k <= w; ++k) result = result * (vars + k) / k;
  return result;
}

void MonomialBasis::check_dims(std::size_t x_size, std::size_t u_size) const {
  if (x_size != n_ || u_size != m_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "basis: expected x of length " + std::to_string(n_) + " and u of length " +
                    std::to_string(m_) + ", got " + std::to_string(x_size) + " and " +
                    std::to_string(u_size));
  }
}

void MonomialBasis::lift_into(std::span<const double> x, std::span<const double> u,
                              std::span<double> out) const {
  check_dims(x.size(), u.size());
  if (out.size() != exponents_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "basis: output buffer has wrong length");
  }
  for (std::size_t k = 0; k < exponents_.size(); ++k) {
    const Exponents& e = exponents_[k];
    double value = 1.0;
    for (std::size_t j = 0; j < n_; ++j) value *= ipow(x[j], e[j]);
    for (std::size_t j = 0; j < m_; ++j) value *= ipow(u[j], e[n_ + j]);
    out[k] = value;
  }
}

Eigen::VectorXd MonomialBasis::lift(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  lift_into({x.data(), static_cast<std::size_t>(x.size())},
            {u.data(), static_cast<std::size_t>(u.size())},
            {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

Eigen::MatrixXd MonomialBasis::lift_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                             const Eigen::Ref<const Eigen::VectorXd>& u) const {
  check_dims(static_cast<std::size_t>(x.size()), static_cast<std::size_t>(u.size()));
  const std::size_t vars = n_ + m_;
  std::vector<double> v(vars);
  for (std::size_t j = 0; j < n_; ++j) v[j] = x[static_cast<Eigen::Index>(j)];
  for (std::size_t j = 0; j < m_; ++j) v[n_ + j] = u[static_cast<Eigen::Index>(j)];

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()),
                                               static_cast<Eigen::Index>(n_));
  for (std::size_t k = 0; k < exponents_.size(); ++k) {
    const Exponents& e = exponents_[k];
    for (std::size_t i = 0; i < n_; ++i) {
      if (e[i] == 0) continue;
      double value = static_cast<double>(e[i]) * ipow(v[i], e[i] - 1);
      for (std::size_t j = 0; j < vars; ++j) {
        if (j != i) value *= ipow(v[j], e[j]);
      }
      grad(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = value;
    }
  }
  return grad;
}

std::size_t MonomialBasis::identity_index(std::size_t i) const {
  if (i >= n_) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "basis: state index " + std::to_string(i) + " out of range for n=" + std::to_string(n_));
  }
  return identity_index_[i];
}

Eigen::VectorXd MonomialBasis::identity_coefficients(std::size_t i) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  c[static_cast<Eigen::Index>(identity_index(i))] = 1.0;
  return c;
}

}  // namespace koopid
