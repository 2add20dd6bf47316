#include "koopid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "koopid/error.hpp"
#include "koopid/excitation.hpp"
#include "koopid/identification.hpp"
#include "koopid/random.hpp"
#include "koopid/simulator.hpp"

namespace koopid {
namespace {

using json = nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string two_digit(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

std::vector<std::filesystem::path> resolve_data(const RunConfig& cfg, const std::vector<std::filesystem::path>& data) {
  if (!data.empty()) return data;
  std::vector<std::filesystem::path> out(cfg.paths.data.begin(), cfg.paths.data.end());
  if (out.empty()) throw Error(ErrorCode::kConfigError, "no data files given (pass paths or set paths.data)");
  return out;
}

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string("stage '") + name + "' failed: " + e.what(), e.time());
  } catch (const SpectrumError& e) {
    throw SpectrumError(e.code(), std::string("stage '") + name + "' failed: " + e.what(), e.offending(),
                        e.spectrum());
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "' failed: " + e.what());
  }
}

void log_eigen_diagnostics(const KoopmanModel& model, const LogSink& log) {
  const auto eig = eigenvalues(model.koopman);
  double min_abs = std::abs(eig.front()), max_abs = 0.0, min_real = eig.front().real();
  for (const auto& l : eig) {
    min_abs = std::min(min_abs, std::abs(l));
    max_abs = std::max(max_abs, std::abs(l));
    min_real = std::min(min_real, l.real());
  }
  log(LogLevel::kInfo, "  eigenvalues of U: |lambda| in [" + fmt("%.6g", min_abs) + ", " + fmt("%.6g", max_abs) +
                           "], min Re(lambda) = " + fmt("%.6g", min_real));
  std::ostringstream all;
  all << "  spectrum:";
  for (const auto& l : eig) all << ' ' << fmt("%.6g", l.real()) << (l.imag() < 0 ? "-" : "+") << fmt("%.3g", std::abs(l.imag())) << 'i';
  log(LogLevel::kDetail, all.str());
}

}  // namespace

std::filesystem::path OutputLayout::model_file(std::size_t w) const {
  return models_dir() / ("model_w" + std::to_string(w) + ".json");
}

std::filesystem::path OutputLayout::report_file(std::size_t w) const {
  return reports_dir() / ("report_w" + std::to_string(w) + ".json");
}

std::string model_label(std::size_t w) {
  return w == 1 ? "Linear (w=1)" : "Koopman (w=" + std::to_string(w) + ")";
}

std::vector<std::filesystem::path> run_generate(const RunConfig& cfg, const LogSink& log) {
  const OutputLayout layout{cfg.paths.out};
  const VectorField field = builtin_field(cfg.system.name, cfg.system.params);
  const std::size_t n = field.state_dim();
  const std::size_t m = field.input_dim();
  const double ts = cfg.dataset.ts;
  const auto intervals = static_cast<std::size_t>(std::llround(cfg.generation.duration / ts));
  if (intervals == 0) throw Error(ErrorCode::kConfigError, "config: generation.duration is shorter than one sample");

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < cfg.generation.x0.size(); ++i) x0[static_cast<Eigen::Index>(i)] = cfg.generation.x0[i];

  std::vector<std::filesystem::path> files;
  json manifest;
  manifest["system"] = {{"name", cfg.system.name}, {"params", cfg.system.params}};
  manifest["seed"] = cfg.seed;
  manifest["ts"] = ts;
  manifest["step"] = cfg.step;
  manifest["trials"] = json::array();
  for (std::size_t trial = 0; trial < cfg.generation.trials; ++trial) {
    const ExcitationConfig exc = cfg.excitation_config(trial);
    const double span = static_cast<double>(intervals) * ts + exc.transition_period;
    const LookupTable table = build_lookup(cfg.table_seed(trial), m,
                                           lookup_columns_for(span, exc.transition_period), exc.lo, exc.hi);
    // Inputs are sampled at ts and held, so each recorded pair obeys the
    // constant-input assumption exactly.
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(intervals + 1), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k <= intervals; ++k) {
      samples.row(static_cast<Eigen::Index>(k)) = input_vector_at(table, exc, static_cast<double>(k) * ts).transpose();
    }
    Trajectory traj = integrate(field, x0, ZohInput{samples, ts}, static_cast<double>(intervals) * ts,
                                cfg.ode_config(), ts);
    if (cfg.generation.noise_std > 0.0) {
      PortableRng rng(cfg.noise_seed(trial));
      for (Eigen::Index r = 0; r < traj.states.rows(); ++r) {
        for (Eigen::Index c = 0; c < traj.states.cols(); ++c) traj.states(r, c) += cfg.generation.noise_std * rng.normal();
      }
    }
    const auto path = layout.data_dir() / ("trial_" + two_digit(trial + 1) + ".csv");
    export_csv(traj, path);
    files.push_back(path);
    manifest["trials"].push_back({{"file", path.filename().string()},
                                  {"samples", traj.samples()},
                                  {"tu", exc.transition_period},
                                  {"table_seed", table.seed},
                                  {"noise_seed", cfg.noise_seed(trial)},
                                  {"noise_std", cfg.generation.noise_std}});
    log(LogLevel::kInfo, "generated " + path.string() + " (" + std::to_string(traj.samples()) + " samples, T_u=" +
                             fmt("%g", exc.transition_period) + " s)");
  }
  manifest["config"] = json::parse(config_to_json(cfg));
  write_text(layout.data_dir() / "manifest.json", manifest.dump(2) + "\n");
  return files;
}

PreparedData prepare_data(const RunConfig& cfg, const std::vector<std::filesystem::path>& data) {
  const auto files = resolve_data(cfg, data);
  PreparedData out;
  const PreprocessOptions opt = cfg.preprocess_options();
  for (std::size_t i = 0; i < files.size(); ++i) {
    const RawTrial raw = ingest_csv(files[i]);
    Trajectory traj = preprocess(raw, opt);
    SplitSpec spec{cfg.dataset.val_count, cfg.dataset.val_duration, cfg.split_seed(i)};
    Split split = split_validation(traj, spec);
    out.trials.push_back(std::move(traj));
    for (auto& s : split.train) out.train.push_back(std::move(s));
    for (auto& s : split.validation) out.validation.push_back(std::move(s));
  }
  return out;
}

std::vector<std::filesystem::path> run_identify(const RunConfig& cfg, const std::vector<std::filesystem::path>& data,
                                                const LogSink& log) {
  const OutputLayout layout{cfg.paths.out};
  const PreparedData prepared = prepare_data(cfg, data);
  const SnapshotSet snapshots = build_snapshots(prepared.train);
  log(LogLevel::kInfo, "snapshots: K = " + std::to_string(snapshots.size()) + " from " +
                           std::to_string(prepared.train.size()) + " training segments");

  std::vector<std::filesystem::path> files;
  for (std::size_t w : cfg.degrees) {
    const MonomialBasis basis(snapshots.state_dim(), snapshots.input_dim(), w);
    log(LogLevel::kInfo, "identifying w=" + std::to_string(w) + ": N = " + std::to_string(basis.size()));
    KoopmanModel model = identify(snapshots, basis, cfg.rcond);
    model.meta.seed = cfg.seed;
    log(LogLevel::kInfo, "  residual ||Psi_x U - Psi_y||_F = " + fmt("%.6g", model.meta.residual) + ", rank " +
                             std::to_string(model.meta.rank) + "/" + std::to_string(basis.size()) +
                             ", cond = " + fmt("%.3g", model.meta.condition));
    log_eigen_diagnostics(model, log);
    log(LogLevel::kDetail, "  input-only generator norm = " + fmt("%.3g", model.meta.input_only_generator_norm) +
                               ", exp/log round trip = " + fmt("%.3g", model.meta.roundtrip_error));
    const auto path = layout.model_file(w);
    save_model(model, path);
    files.push_back(path);
    log(LogLevel::kInfo, "  wrote " + path.string());
  }
  return files;
}

EvaluateOutput run_evaluate(const RunConfig& cfg, const std::vector<std::filesystem::path>& models,
                            const std::vector<std::filesystem::path>& data, const LogSink& log) {
  const OutputLayout layout{cfg.paths.out};
  std::vector<std::filesystem::path> model_files = models;
  if (model_files.empty()) {
    for (std::size_t w : cfg.degrees) model_files.push_back(layout.model_file(w));
  }
  const PreparedData prepared = prepare_data(cfg, data);
  if (prepared.validation.empty()) throw Error(ErrorCode::kInfeasibleSplit, "evaluate: no validation segments");
  const NormalizationBounds bounds = NormalizationBounds::from_trajectories(prepared.trials);

  const auto horizon_samples = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dataset.ts)) + 1;
  std::vector<Trajectory> segments;
  for (const auto& seg : prepared.validation) segments.push_back(seg.slice(0, std::min(seg.samples(), horizon_samples)));

  EvaluateOutput out;
  for (const auto& file : model_files) {
    const KoopmanModel model = load_model(file);
    if (model.state_dim() != bounds.size() || model.input_dim() != segments.front().input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, file.string() + ": model dimensions do not match the data");
    }
    const std::size_t w = model.basis.max_degree();
    Evaluation eval = evaluate_model_detailed(model, segments, bounds, cfg.ode_config(), model_label(w));
    for (const auto& warning : eval.report.warnings) log(LogLevel::kWarning, model_label(w) + ": " + warning);
    write_text(layout.report_file(w), report_to_json(eval.report));
    for (std::size_t s = 0; s < eval.segments.size(); ++s) {
      write_text(layout.predictions_dir() / ("w" + std::to_string(w) + "_segment_" + two_digit(s + 1) + ".csv"),
                 prediction_csv(eval.segments[s]));
    }
    log(LogLevel::kInfo, model_label(w) + ": avg NRMSE " + fmt("%.3f", eval.report.avg_nrmse) + "% over " +
                             std::to_string(eval.report.segments) + " segments (" +
                             std::to_string(eval.report.diverged) + " diverged)");
    out.reports.push_back(std::move(eval.report));
  }
  out.comparison = compare(out.reports);
  write_text(layout.root / "comparison.txt", out.comparison.table);
  write_text(layout.root / "comparison.json", out.comparison.json);
  log(LogLevel::kInfo, out.comparison.table);
  return out;
}

Comparison run_compare(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out,
                       const LogSink& log) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "compare: no report files given");
  std::vector<EvaluationReport> all;
  for (const auto& file : reports) {
    try {
      for (auto& r : reports_from_json(read_text(file))) all.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
  }
  Comparison cmp = compare(all);
  if (!out.empty()) {
    write_text(out, cmp.table);
    auto json_path = out;
    json_path.replace_extension(".json");
    write_text(json_path, cmp.json);
  }
  log(LogLevel::kInfo, cmp.table);
  return cmp;
}

EvaluateOutput run_pipeline(const RunConfig& cfg, const LogSink& log) {
  const OutputLayout layout{cfg.paths.out};
  const auto data = run_stage("generate", [&] { return run_generate(cfg, log); });
  const auto models = run_stage("identify", [&] { return run_identify(cfg, data, log); });
  EvaluateOutput out = run_stage("evaluate", [&] { return run_evaluate(cfg, models, data, log); });

  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["config"] = json::parse(config_to_json(cfg));
  manifest["data"] = json::array();
  for (const auto& f : data) manifest["data"].push_back(std::filesystem::relative(f, layout.root).string());
  manifest["models"] = json::array();
  for (const auto& f : models) manifest["models"].push_back(std::filesystem::relative(f, layout.root).string());
  manifest["reports"] = json::array();
  for (std::size_t w : cfg.degrees) {
    manifest["reports"].push_back(std::filesystem::relative(layout.report_file(w), layout.root).string());
  }
  manifest["comparison"] = {"comparison.txt", "comparison.json"};
  write_text(layout.root / "manifest.json", manifest.dump(2) + "\n");
  return out;
}

}  // namespace koopid
