#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "koopid/config.hpp"
#include "koopid/dataset.hpp"
#include "koopid/metrics.hpp"

namespace koopid {

enum class LogLevel { kInfo = 0, kDetail = 1, kWarning = 2 };
using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Output layout below RunConfig::paths.out.
struct OutputLayout {
  std::filesystem::path root;
  std::filesystem::path data_dir() const { return root / "data"; }
  std::filesystem::path models_dir() const { return root / "models"; }
  std::filesystem::path reports_dir() const { return root / "reports"; }
  std::filesystem::path predictions_dir() const { return root / "predictions"; }
  std::filesystem::path model_file(std::size_t w) const;
  std::filesystem::path report_file(std::size_t w) const;
};

std::string model_label(std::size_t w);

/// Integrates the configured system under seeded excitation and writes one
/// CSV per trial plus data/manifest.json. Returns the CSV paths.
std::vector<std::filesystem::path> run_generate(const RunConfig& cfg, const LogSink& log);

/// Preprocessed trials split into training and validation segments.
struct PreparedData {
  std::vector<Trajectory> trials;
  std::vector<Trajectory> train;
  std::vector<Trajectory> validation;
};

/// Ingest, preprocess and split. Split seeds are derived per trial from the
/// master seed, so identify and evaluate see the same partition.
PreparedData prepare_data(const RunConfig& cfg, const std::vector<std::filesystem::path>& data);

/// One model file per configured degree.
std::vector<std::filesystem::path> run_identify(const RunConfig& cfg, const std::vector<std::filesystem::path>& data,
                                                const LogSink& log);

struct EvaluateOutput {
  std::vector<EvaluationReport> reports;
  Comparison comparison;
};

/// Evaluates each model on the validation segments and writes reports,
/// per-segment prediction CSVs and comparison.{txt,json}.
EvaluateOutput run_evaluate(const RunConfig& cfg, const std::vector<std::filesystem::path>& models,
                            const std::vector<std::filesystem::path>& data, const LogSink& log);

/// Renders a comparison of stored reports; writes it to `out` when non-empty.
Comparison run_compare(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out,
                       const LogSink& log);

/// generate -> identify -> evaluate -> compare under one seed. A failing
/// stage aborts, and its error message names the stage.
EvaluateOutput run_pipeline(const RunConfig& cfg, const LogSink& log);

}  // namespace koopid
