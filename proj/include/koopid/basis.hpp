#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace koopid {

/// Monomials in (x_1..x_n, u_1..u_m) of total degree <= w.
///
/// Ordering is graded: ascending total degree, and descending lexicographic
/// order on the exponent tuple within one degree. The constant monomial is
/// always first and x_i (degree one) sits at index 1 + i for 0-based i.
/// Instances are immutable once built.
class MonomialBasis {
 public:
  using Exponents = std::vector<int>;

  /// Throws Error(kInvalidDimension) if n == 0 or w == 0.
  MonomialBasis(std::size_t n, std::size_t m, std::size_t w);

  /// Rebuilds a basis from a stored exponent list, checking it against the
  /// canonical enumeration for (n, m, w).
  static MonomialBasis from_exponents(std::size_t n, std::size_t m, std::size_t w,
                                      const std::vector<Exponents>& exponents);

  std::size_t state_dim() const noexcept { return n_; }
  std::size_t input_dim() const noexcept { return m_; }
  std::size_t max_degree() const noexcept { return w_; }
  std::size_t size() const noexcept { return exponents_.size(); }
  const std::vector<Exponents>& exponents() const noexcept { return exponents_; }

  /// Closed form (n+m+w)! / ((n+m)! w!).
  static std::size_t cardinality(std::size_t n, std::size_t m, std::size_t w);

  Eigen::VectorXd lift(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& u) const;

  /// Writes psi(x, u) into `out` (length size()), no allocation.
  void lift_into(std::span<const double> x, std::span<const double> u,
                 std::span<double> out) const;

  /// N x n Jacobian d psi / d x.
  Eigen::MatrixXd lift_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& u) const;

  /// Coefficient vector of the observable f(x, u) = x_i (0-based i).
  Eigen::VectorXd identity_coefficients(std::size_t i) const;

  /// Position of the degree-one monomial x_i.
  std::size_t identity_index(std::size_t i) const;

  friend bool operator==(const MonomialBasis& a, const MonomialBasis& b) {
    return a.n_ == b.n_ && a.m_ == b.m_ && a.w_ == b.w_ && a.exponents_ == b.exponents_;
  }

 private:
  void check_dims(std::size_t x_size, std::size_t u_size) const;

  std::size_t n_;
  std::size_t m_;
  std::size_t w_;
  std::vector<Exponents> exponents_;
  std::vector<std::size_t> identity_index_;
};

}  // namespace koopid
