#include "koopid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "koopid/error.hpp"

namespace koopid {
namespace {

using json = nlohmann::json;

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

NormalizationBounds NormalizationBounds::from_trajectories(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw Error(ErrorCode::kEmptyInput, "bounds: no trajectories");
  const Eigen::Index n = trajectories.front().states.cols();
  NormalizationBounds b;
  b.lower = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  b.upper = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  for (const Trajectory& t : trajectories) {
    if (t.states.cols() != n) throw Error(ErrorCode::kDimensionMismatch, "bounds: trajectories disagree on n");
    if (t.states.rows() == 0) continue;
    b.lower = b.lower.cwiseMin(t.states.colwise().minCoeff().transpose());
    b.upper = b.upper.cwiseMax(t.states.colwise().maxCoeff().transpose());
  }
  return b;
}

void NormalizationBounds::validate() const {
  if (lower.size() != upper.size()) throw Error(ErrorCode::kDimensionMismatch, "bounds: size mismatch");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(upper[i] > lower[i])) {
      throw Error(ErrorCode::kDegenerateBounds, "bounds: state x" + std::to_string(i + 1) + " has zero range");
    }
  }
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw Error(ErrorCode::kLengthMismatch, "rmse: series lengths differ");
  if (y.empty()) throw Error(ErrorCode::kEmptyInput, "rmse: empty series");
  double sum = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) sum += (y[k] - yhat[k]) * (y[k] - yhat[k]);
  return std::sqrt(sum / static_cast<double>(y.size()));
}

double nrmse(std::span<const double> y, std::span<const double> yhat, double y_min, double y_max) {
  if (!(y_max > y_min)) throw Error(ErrorCode::kDegenerateBounds, "nrmse: y_max must exceed y_min");
  return rmse(y, yhat) / (y_max - y_min) * 100.0;
}

EvaluationReport aggregate_report(const std::string& model_name, std::span<const double> per_state_nrmse,
                                  std::span<const double> per_state_rmse) {
  if (per_state_nrmse.empty()) throw Error(ErrorCode::kEmptyInput, "aggregate: no states");
  if (!per_state_rmse.empty() && per_state_rmse.size() != per_state_nrmse.size()) {
    throw Error(ErrorCode::kLengthMismatch, "aggregate: RMSE and NRMSE lists differ in length");
  }
  EvaluationReport r;
  r.model_name = model_name;
  const std::size_t n = per_state_nrmse.size();
  for (std::size_t i = 0; i < n; ++i) {
    StateError e;
    e.nrmse = per_state_nrmse[i];
    if (!per_state_rmse.empty()) e.rmse = per_state_rmse[i];
    r.per_state.push_back(e);
  }
  r.avg_nrmse = std::accumulate(per_state_nrmse.begin(), per_state_nrmse.end(), 0.0) / static_cast<double>(n);
  if (n == 1) {
    r.std_nrmse = 0.0;
    r.std_defined = false;
  } else {
    double ss = 0.0;
    for (double v : per_state_nrmse) ss += (v - r.avg_nrmse) * (v - r.avg_nrmse);
    r.std_nrmse = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return r;
}

Evaluation evaluate_model_detailed(const KoopmanModel& model, std::span<const Trajectory> validation,
                                   const NormalizationBounds& bounds, const OdeConfig& cfg,
                                   const std::string& model_name) {
  if (validation.empty()) throw Error(ErrorCode::kEmptyInput, "evaluate: no validation segments");
  bounds.validate();
  const std::size_t n = model.state_dim();
  if (bounds.size() != n) throw Error(ErrorCode::kDimensionMismatch, "evaluate: bounds have wrong dimension");

  std::vector<double> sq_sum(n, 0.0);
  std::size_t points = 0;
  Evaluation out;
  std::size_t used = 0, diverged = 0;
  std::vector<std::string> warnings;
  for (std::size_t s = 0; s < validation.size(); ++s) {
    const Trajectory& seg = validation[s];
    if (seg.state_dim() != n || seg.input_dim() != model.input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "evaluate: segment dimensions differ from the model");
    }
    if (std::abs(seg.ts - model.ts) > 1e-12 * model.ts) {
      throw Error(ErrorCode::kMixedSamplingPeriod, "evaluate: segment ts differs from the model ts");
    }
    SegmentPrediction pred{seg, std::nullopt, 0.0};
    try {
      Trajectory sim = simulate_model(model, seg.states.row(0).transpose(), seg.inputs, cfg);
      sim.t0 = seg.t0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        sq_sum[i] += (seg.states.col(c) - sim.states.col(c)).squaredNorm();
      }
      points += seg.samples();
      ++used;
      pred.predicted = std::move(sim);
    } catch (const DivergenceError& e) {
      ++diverged;
      pred.divergence_time = e.time();
      warnings.push_back("segment " + std::to_string(s + 1) + " diverged at t=" +
                         std::to_string(seg.t0 + e.time()) + " s and was excluded");
    }
    out.segments.push_back(std::move(pred));
  }
  if (used == 0) {
    throw DivergenceError("evaluate: every validation segment diverged", out.segments.front().divergence_time);
  }

  std::vector<double> per_rmse(n), per_nrmse(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    per_rmse[i] = std::sqrt(sq_sum[i] / static_cast<double>(points));
    per_nrmse[i] = per_rmse[i] / (bounds.upper[c] - bounds.lower[c]) * 100.0;
  }
  out.report = aggregate_report(model_name, per_nrmse, per_rmse);
  out.report.segments = used;
  out.report.diverged = diverged;
  out.report.warnings = std::move(warnings);
  return out;
}

EvaluationReport evaluate_model(const KoopmanModel& model, std::span<const Trajectory> validation,
                                const NormalizationBounds& bounds, const OdeConfig& cfg,
                                const std::string& model_name) {
  return evaluate_model_detailed(model, validation, bounds, cfg, model_name).report;
}

Comparison compare(std::span<const EvaluationReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "compare: no reports");
  const std::size_t n = reports.front().per_state.size();
  for (const auto& r : reports) {
    if (r.per_state.size() != n) {
      throw Error(ErrorCode::kInconsistentStateCounts, "compare: reports disagree on the number of states");
    }
  }
  std::vector<const EvaluationReport*> rows;
  for (const auto& r : reports) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const EvaluationReport* a, const EvaluationReport* b) {
    if (a->avg_nrmse != b->avg_nrmse) return a->avg_nrmse < b->avg_nrmse;
    return a->model_name < b->model_name;
  });

  std::size_t name_width = 5;
  for (const auto* r : rows) name_width = std::max(name_width, r->model_name.size());
  name_width += 2;
  constexpr std::size_t kCol = 7;
  constexpr std::size_t kStdCol = 11;

  std::ostringstream table;
  table << pad_right("Model", name_width);
  for (std::size_t i = 0; i < n; ++i) table << pad_left("x" + std::to_string(i + 1), kCol);
  table << pad_left("Avg.", kCol) << pad_left("Std. Dev.", kStdCol) << '\n';
  bool footnote = false;
  for (const auto* r : rows) {
    table << pad_right(r->model_name, name_width);
    for (const auto& s : r->per_state) table << pad_left(fixed1(s.nrmse), kCol);
    table << pad_left(fixed1(r->avg_nrmse), kCol);
    std::string std_cell = fixed1(r->std_nrmse);
    if (!r->std_defined) {
      std_cell += '*';
      footnote = true;
    }
    table << pad_left(std_cell, kStdCol) << '\n';
  }
  if (footnote) table << "* single state: standard deviation undefined\n";

  json body;
  body["states"] = n;
  body["rows"] = json::array();
  for (const auto* r : rows) {
    json row;
    row["model"] = r->model_name;
    row["nrmse"] = json::array();
    for (const auto& s : r->per_state) row["nrmse"].push_back(s.nrmse);
    row["avg_nrmse"] = r->avg_nrmse;
    row["std_nrmse"] = r->std_nrmse;
    row["std_defined"] = r->std_defined;
    row["segments"] = r->segments;
    row["diverged"] = r->diverged;
    body["rows"].push_back(std::move(row));
  }
  return {table.str(), body.dump(2) + "\n"};
}

std::string report_to_json(const EvaluationReport& report) {
  json j;
  j["model"] = report.model_name;
  j["per_state"] = json::array();
  for (const auto& s : report.per_state) {
    json e;
    e["rmse"] = s.rmse ? json(*s.rmse) : json(nullptr);
    e["nrmse"] = s.nrmse;
    j["per_state"].push_back(std::move(e));
  }
  j["avg_nrmse"] = report.avg_nrmse;
  j["std_nrmse"] = report.std_nrmse;
  j["std_defined"] = report.std_defined;
  j["segments"] = report.segments;
  j["diverged"] = report.diverged;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::vector<EvaluationReport> reports_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("report: ") + e.what());
  }
  auto parse_one = [](const json& j) {
    try {
      std::vector<double> nr, rm;
      bool all_rmse = true;
      for (const auto& s : j.at("per_state")) {
        nr.push_back(s.at("nrmse").get<double>());
        if (s.contains("rmse") && s["rmse"].is_number()) {
          rm.push_back(s["rmse"].get<double>());
        } else {
          all_rmse = false;
        }
      }
      EvaluationReport r = aggregate_report(j.at("model").get<std::string>(), nr,
                                            all_rmse ? std::span<const double>(rm) : std::span<const double>());
      auto check = [&](const char* key, double recomputed) {
        if (!j.contains(key)) return;
        const double stored = j[key].get<double>();
        if (std::abs(stored - recomputed) > 1e-12 * std::max(1.0, std::abs(recomputed))) {
          throw Error(ErrorCode::kSchemaError, std::string("report: stored ") + key + " " + g17(stored) +
                                                   " disagrees with per-state entries (" + g17(recomputed) + ")");
        }
      };
      check("avg_nrmse", r.avg_nrmse);
      if (r.std_defined) check("std_nrmse", r.std_nrmse);
      r.segments = j.value("segments", std::size_t{0});
      r.diverged = j.value("diverged", std::size_t{0});
      if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
      return r;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaError, std::string("report: ") + e.what());
    }
  };
  std::vector<EvaluationReport> out;
  if (doc.is_array()) {
    for (const auto& j : doc) out.push_back(parse_one(j));
  } else {
    out.push_back(parse_one(doc));
  }
  return out;
}

std::string prediction_csv(const SegmentPrediction& segment) {
  const Trajectory& meas = segment.measured;
  std::ostringstream os;
  os << 't';
  for (std::size_t i = 0; i < meas.state_dim(); ++i) os << ",x" << i + 1;
  for (std::size_t i = 0; i < meas.state_dim(); ++i) os << ",x" << i + 1 << "_hat";
  for (std::size_t j = 0; j < meas.input_dim(); ++j) os << ",u" << j + 1;
  os << '\n';
  for (std::size_t k = 0; k < meas.samples(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    os << g17(meas.time(k));
    for (Eigen::Index i = 0; i < meas.states.cols(); ++i) os << ',' << g17(meas.states(r, i));
    for (Eigen::Index i = 0; i < meas.states.cols(); ++i) {
      os << ',' << (segment.predicted ? g17(segment.predicted->states(r, i)) : std::string("nan"));
    }
    for (Eigen::Index j = 0; j < meas.inputs.cols(); ++j) os << ',' << g17(meas.inputs(r, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace koopid
