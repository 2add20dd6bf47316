#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "koopid/dataset.hpp"
#include "koopid/identification.hpp"
#include "koopid/simulator.hpp"

namespace koopid {

/// Per-state measured extrema used to normalize RMSE.
struct NormalizationBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  std::size_t size() const { return static_cast<std::size_t>(lower.size()); }

  /// Extrema of the measured states over every given trajectory.
  static NormalizationBounds from_trajectories(std::span<const Trajectory> trajectories);
  /// Throws Error(kDegenerateBounds) if any upper <= lower.
  void validate() const;
};

double rmse(std::span<const double> y, std::span<const double> yhat);

/// RMSE / (y_max - y_min) * 100.
double nrmse(std::span<const double> y, std::span<const double> yhat, double y_min, double y_max);

struct StateError {
  std::optional<double> rmse;  // absent for reports built from published NRMSE only
  double nrmse = 0.0;          // percent
};

struct EvaluationReport {
  std::string model_name;
  std::vector<StateError> per_state;
  double avg_nrmse = 0.0;
  double std_nrmse = 0.0;    // sample (n - 1) standard deviation
  bool std_defined = true;   // false for a single state
  std::size_t segments = 0;  // segments that entered the pooled error
  std::size_t diverged = 0;  // segments excluded because simulation diverged
  std::vector<std::string> warnings;
};

/// Mean and sample standard deviation of the per-state NRMSE values.
/// `per_state_rmse` may be empty (published tables carry no RMSE).
EvaluationReport aggregate_report(const std::string& model_name, std::span<const double> per_state_nrmse,
                                  std::span<const double> per_state_rmse = {});

struct SegmentPrediction {
  Trajectory measured;
  std::optional<Trajectory> predicted;  // empty when the simulation diverged
  double divergence_time = 0.0;
};

struct Evaluation {
  EvaluationReport report;
  std::vector<SegmentPrediction> segments;
};

/// Simulates the model from the first measured state of every segment under
/// its recorded inputs, pools squared errors per state across segments, and
/// normalizes with `bounds`. Diverged segments are counted and excluded.
Evaluation evaluate_model_detailed(const KoopmanModel& model, std::span<const Trajectory> validation,
                                   const NormalizationBounds& bounds, const OdeConfig& cfg,
                                   const std::string& model_name = "Koopman");

EvaluationReport evaluate_model(const KoopmanModel& model, std::span<const Trajectory> validation,
                                const NormalizationBounds& bounds, const OdeConfig& cfg,
                                const std::string& model_name = "Koopman");

struct Comparison {
  std::string table;  // fixed width, one row per model, sorted by Avg.
  std::string json;
};

/// Throws Error(kInconsistentStateCounts) if the reports disagree on n.
Comparison compare(std::span<const EvaluationReport> reports);

std::string report_to_json(const EvaluationReport& report);
/// Accepts one report object or an array of them. Averages are recomputed
/// from the per-state entries; stored values must agree to 1e-12.
std::vector<EvaluationReport> reports_from_json(const std::string& text);

/// Measured and predicted states side by side: t, x1..xn, x1_hat..xn_hat, u1..um.
std::string prediction_csv(const SegmentPrediction& segment);

}  // namespace koopid
