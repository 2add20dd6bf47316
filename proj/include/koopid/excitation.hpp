#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace koopid {

/// m x K_u table of i.i.d. uniform values in [lo, hi]; column k is the
/// set-point for segment boundary k.
struct LookupTable {
  Eigen::MatrixXd values;
  std::uint64_t seed = 0;
  double lo = 0.0;
  double hi = 0.0;

  std::size_t channels() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t columns() const { return static_cast<std::size_t>(values.cols()); }
};

struct ExcitationConfig {
  double transition_period = 4.0;  // T_u, seconds
  double lo = 0.0;
  double hi = 10.0;
  /// Per-channel phase offset as a fraction of T_u; channel i (0-based) is
  /// shifted by i * offset_fraction * T_u. Unset means 1/m.
  std::optional<double> offset_fraction;

  /// Throws Error(kInvalidRange) on T_u <= 0, lo >= hi or an offset outside [0, 1).
  void validate() const;
  double resolved_offset(std::size_t channels) const;
};

/// Throws Error(kInvalidRange) if lo >= hi or K_u < 2.
LookupTable build_lookup(std::uint64_t seed, std::size_t channels, std::size_t columns, double lo,
                         double hi);

/// Table columns needed to drive a signal for `duration` seconds.
std::size_t lookup_columns_for(double duration, double transition_period);

/// Piecewise-linear excitation value of `channel` (0-based) at time t >= 0.
///
/// With k = floor(t / T_u) and tau = t - k T_u:
///   u = (Y[c,k+1] - Y[c,k]) / T_u * (tau + c * offset * T_u) + Y[c,k]
/// clamped to [lo, hi]. Throws Error(kTableExhausted) when k + 1 >= K_u.
double input_at(const LookupTable& table, const ExcitationConfig& cfg, double t, std::size_t channel);

Eigen::VectorXd input_vector_at(const LookupTable& table, const ExcitationConfig& cfg, double t);

}  // namespace koopid
