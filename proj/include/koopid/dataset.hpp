#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace koopid {

/// A measured trial as read from disk: possibly non-uniform timestamps.
struct RawTrial {
  std::vector<double> timestamps;
  Eigen::MatrixXd states;  // T x n
  Eigen::MatrixXd inputs;  // T x m
  std::string name;

  std::size_t samples() const { return timestamps.size(); }
  std::size_t state_dim() const { return static_cast<std::size_t>(states.cols()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(inputs.cols()); }
};

/// Uniformly sampled series on the grid t0 + k * ts.
struct Trajectory {
  double ts = 0.0;
  double t0 = 0.0;
  Eigen::MatrixXd states;  // T x n
  Eigen::MatrixXd inputs;  // T x m

  std::size_t samples() const { return static_cast<std::size_t>(states.rows()); }
  std::size_t state_dim() const { return static_cast<std::size_t>(states.cols()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(inputs.cols()); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * ts; }
  double duration() const { return samples() == 0 ? 0.0 : static_cast<double>(samples() - 1) * ts; }

  /// Samples [begin, begin + count) as a new trajectory with shifted t0.
  Trajectory slice(std::size_t begin, std::size_t count) const;
};

/// Row k holds the snapshot pair {(x_k, u_k), (y_k, u_k)}.
struct SnapshotSet {
  Eigen::MatrixXd x;  // K x n
  Eigen::MatrixXd u;  // K x m
  Eigen::MatrixXd y;  // K x n
  double ts = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t state_dim() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(u.cols()); }
};

struct SplitSpec {
  std::size_t validation_count = 3;
  double validation_duration = 10.0;  // seconds
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<Trajectory> train;
  std::vector<Trajectory> validation;
};

// CSV I/O. Header is `t,x1..xn,u1..um`; columns may appear in any order.

RawTrial parse_csv(std::istream& in, const std::string& name);
RawTrial ingest_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Trajectory& traj);
void export_csv(const Trajectory& traj, const std::filesystem::path& path);
void export_csv(const RawTrial& trial, const std::filesystem::path& path);

/// Odd window length round(window / ts), bumped to the next odd number.
std::size_t moving_average_length(double window, double ts);

/// Centered moving average along rows. Near the ends the window is clipped
/// to the available samples, so the output keeps the input's shape.
Eigen::MatrixXd moving_average(const Eigen::MatrixXd& signal, double window, double ts);

/// Linear interpolation onto t0 + k ts, t0 = first timestamp.
Trajectory resample_uniform(const RawTrial& trial, double ts);

/// Central differences in the interior, one-sided at the two ends.
Eigen::MatrixXd central_difference(const Eigen::MatrixXd& signal, double ts);

/// Places `validation_count` non-overlapping windows at seeded random
/// offsets; the complement becomes the training segments.
Split split_validation(const Trajectory& traj, const SplitSpec& spec);

/// One pair per consecutive sample inside each segment; never across segments.
SnapshotSet build_snapshots(std::span<const Trajectory> segments);

struct PreprocessOptions {
  double ts = 0.02;
  /// First smoothing pass on the raw signals; <= 0 disables it.
  double filter_window = 1.0;
  /// Second pass on velocity columns after resampling; <= 0 disables it.
  double velocity_filter_window = 1.0;
  /// 0-based state columns that hold velocities.
  std::vector<std::size_t> velocity_columns;
  /// Append central-difference velocities of every state as new columns.
  bool derive_velocity = false;
};

/// Smooth, resample, optionally differentiate, then refilter velocities.
Trajectory preprocess(const RawTrial& trial, const PreprocessOptions& options);

}  // namespace koopid
