#include "koopid/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "koopid/error.hpp"
#include "koopid/random.hpp"

namespace koopid {

void ExcitationConfig::validate() const {
  if (!(transition_period > 0.0) || !std::isfinite(transition_period)) {
    throw Error(ErrorCode::kInvalidRange, "excitation: transition period must be positive");
  }
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidRange, "excitation: requires lo < hi");
  if (offset_fraction && !(*offset_fraction >= 0.0 && *offset_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidRange, "excitation: offset fraction must lie in [0, 1)");
  }
}

double ExcitationConfig::resolved_offset(std::size_t channels) const {
  if (offset_fraction) return *offset_fraction;
  return channels > 0 ? 1.0 / static_cast<double>(channels) : 0.0;
}

LookupTable build_lookup(std::uint64_t seed, std::size_t channels, std::size_t columns, double lo,
                         double hi) {
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidRange, "lookup: requires lo < hi");
  if (columns < 2) throw Error(ErrorCode::kInvalidRange, "lookup: needs at least two columns");
  LookupTable table;
  table.seed = seed;
  table.lo = lo;
  table.hi = hi;
  table.values.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(columns));
  PortableRng rng(seed);
  // Column-major draw order: all channels of column 0, then column 1, ...
  for (Eigen::Index k = 0; k < table.values.cols(); ++k) {
    for (Eigen::Index i = 0; i < table.values.rows(); ++i) table.values(i, k) = rng.uniform(lo, hi);
  }
  return table;
}

std::size_t lookup_columns_for(double duration, double transition_period) {
  return static_cast<std::size_t>(std::floor(duration / transition_period)) + 2;
}

double input_at(const LookupTable& table, const ExcitationConfig& cfg, double t, std::size_t channel) {
  if (channel >= table.channels()) {
    throw Error(ErrorCode::kIndexOutOfRange, "excitation: channel " + std::to_string(channel) +
                                                 " out of range");
  }
  if (!(t >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "excitation: time must be >= 0");
  const double period = cfg.transition_period;
  const auto k = static_cast<std::size_t>(std::floor(t / period));
  if (k + 1 >= table.columns()) {
    throw Error(ErrorCode::kTableExhausted,
                "excitation: lookup table exhausted at t=" + std::to_string(t));
  }
  const double tau = t - static_cast<double>(k) * period;
  const double offset = static_cast<double>(channel) * cfg.resolved_offset(table.channels()) * period;
  const auto row = static_cast<Eigen::Index>(channel);
  const double a = table.values(row, static_cast<Eigen::Index>(k));
  const double b = table.values(row, static_cast<Eigen::Index>(k + 1));
  const double u = (b - a) / period * (tau + offset) + a;
  return std::clamp(u, cfg.lo, cfg.hi);
}

Eigen::VectorXd input_vector_at(const LookupTable& table, const ExcitationConfig& cfg, double t) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(table.channels()));
  for (std::size_t i = 0; i < table.channels(); ++i) u[static_cast<Eigen::Index>(i)] = input_at(table, cfg, t, i);
  return u;
}

}  // namespace koopid
