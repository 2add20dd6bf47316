// koopid command-line front end. Talks to the library only through koopid.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "koopid/koopid.h"

namespace {

using nlohmann::json;

struct Overrides {
  std::optional<std::string> out;
  std::optional<long long> seed;
  std::vector<double> tu;
  std::optional<double> lo;
  std::optional<double> hi;
  std::optional<int> channels;
  std::optional<double> ts;
  std::optional<double> filter_window;
  std::optional<int> val_count;
  std::optional<double> val_duration;
};

struct Options {
  std::string config;
  bool verbose = false;
  Overrides over;
  std::vector<std::string> data;
  std::vector<std::string> models;
  std::vector<std::string> reports;
};

void print_line(koopid_log_level level, const char* line, void* user) {
  const bool verbose = *static_cast<const bool*>(user);
  if (level == KOOPID_LOG_DETAIL && !verbose) return;
  if (level == KOOPID_LOG_WARNING) {
    std::cout << "warning: " << line << '\n';
  } else {
    std::cout << line << '\n';
  }
}

int report_failure(koopid_status status) {
  std::cerr << "error [" << koopid_last_error_kind() << "]: " << koopid_last_error() << '\n';
  double re[64];
  double im[64];
  const size_t count = koopid_last_error_eigenvalues(re, im, 64);
  if (count > 0) {
    std::cerr << "eigenvalues of the fitted Koopman matrix:\n";
    for (size_t i = 0; i < count && i < 64; ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "  %.6g %+.6gi\n", re[i], im[i]);
      std::cerr << buf;
    }
    if (count > 64) std::cerr << "  ... (" << count - 64 << " more)\n";
  }
  return static_cast<int>(status);
}

// Reads the config file and applies command-line overrides. Returns the JSON
// text handed to the library, or an exit code on failure.
std::optional<std::string> load_config_text(const Options& opt, int& exit_code) {
  std::ifstream in(opt.config, std::ios::binary);
  if (!in) {
    std::cerr << "error [ConfigError]: cannot open config file " << opt.config << '\n';
    exit_code = KOOPID_ERROR_CONFIG;
    return std::nullopt;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const Overrides& o = opt.over;
  const bool any = o.out || o.seed || !o.tu.empty() || o.lo || o.hi || o.channels || o.ts || o.filter_window ||
                   o.val_count || o.val_duration;
  if (!any) return ss.str();

  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::exception& e) {
    std::cerr << "error [ConfigError]: " << opt.config << ": " << e.what() << '\n';
    exit_code = KOOPID_ERROR_CONFIG;
    return std::nullopt;
  }
  if (!doc.is_object()) {
    std::cerr << "error [ConfigError]: " << opt.config << ": top level must be an object\n";
    exit_code = KOOPID_ERROR_CONFIG;
    return std::nullopt;
  }
  if (o.out) doc["paths"]["out"] = *o.out;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.tu.size() == 1) doc["excitation"]["tu"] = o.tu.front();
  if (o.tu.size() > 1) doc["excitation"]["tu"] = o.tu;
  if (o.lo) doc["excitation"]["lo"] = *o.lo;
  if (o.hi) doc["excitation"]["hi"] = *o.hi;
  if (o.channels) doc["excitation"]["channels"] = *o.channels;
  if (o.ts) doc["dataset"]["ts"] = *o.ts;
  if (o.filter_window) doc["dataset"]["filter_window"] = *o.filter_window;
  if (o.val_count) doc["dataset"]["val_count"] = *o.val_count;
  if (o.val_duration) doc["dataset"]["val_duration"] = *o.val_duration;
  return doc.dump();
}

std::vector<const char*> c_strings(const std::vector<std::string>& items) {
  std::vector<const char*> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.c_str());
  return out;
}

void add_common(CLI::App* cmd, Options& opt, bool needs_config) {
  auto* c = cmd->add_option("--config", opt.config, "Run configuration (JSON)");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.over.out, "Output directory (overrides paths.out)");
  cmd->add_flag("--verbose,-v", opt.verbose, "Print detailed diagnostics");
}

void add_run_overrides(CLI::App* cmd, Options& opt) {
  cmd->add_option("--seed", opt.over.seed, "Master seed override");
  cmd->add_option("--tu", opt.over.tu, "Transition period in seconds (repeat once per trial, or give one shared value)")
      ->allow_extra_args(false);
  cmd->add_option("--lo", opt.over.lo, "Lower excitation bound");
  cmd->add_option("--hi", opt.over.hi, "Upper excitation bound");
  cmd->add_option("--channels", opt.over.channels, "Number of input channels");
}

void add_dataset_overrides(CLI::App* cmd, Options& opt) {
  cmd->add_option("--ts", opt.over.ts, "Sampling period in seconds");
  cmd->add_option("--filter-window", opt.over.filter_window, "Moving-average window in seconds (0 disables)");
  cmd->add_option("--val-count", opt.over.val_count, "Validation segments per trial");
  cmd->add_option("--val-duration", opt.over.val_duration, "Validation segment length in seconds");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman-operator system identification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(koopid_version()));

  Options opt;

  auto* gen = app.add_subcommand("generate", "Simulate a builtin system and write CSV trials");
  add_common(gen, opt, true);
  add_run_overrides(gen, opt);
  add_dataset_overrides(gen, opt);

  auto* ident = app.add_subcommand("identify", "Fit Koopman models from CSV trials");
  add_common(ident, opt, true);
  add_run_overrides(ident, opt);
  add_dataset_overrides(ident, opt);
  ident->add_option("data", opt.data, "CSV trial files (default: paths.data)");

  auto* eval = app.add_subcommand("evaluate", "Simulate models on validation segments and report NRMSE");
  add_common(eval, opt, true);
  add_run_overrides(eval, opt);
  add_dataset_overrides(eval, opt);
  eval->add_option("--model", opt.models, "Model file (repeatable; default: one per configured degree)")
      ->allow_extra_args(false);
  eval->add_option("data", opt.data, "CSV trial files (default: paths.data)");

  auto* cmp = app.add_subcommand("compare", "Tabulate stored evaluation reports");
  cmp->add_option("--out", opt.over.out, "Write the table here (JSON alongside)");
  cmp->add_flag("--verbose,-v", opt.verbose, "Print detailed diagnostics");
  cmp->add_option("reports", opt.reports, "Report JSON files")->required();

  auto* pipe = app.add_subcommand("pipeline", "generate, identify, evaluate and compare in one run");
  add_common(pipe, opt, true);
  add_run_overrides(pipe, opt);
  add_dataset_overrides(pipe, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : KOOPID_ERROR_CONFIG;
  }

  koopid_status status = KOOPID_OK;
  if (cmp->parsed()) {
    const auto reports = c_strings(opt.reports);
    status = koopid_cmd_compare(reports.data(), reports.size(), opt.over.out ? opt.over.out->c_str() : nullptr,
                                print_line, &opt.verbose);
    return status == KOOPID_OK ? 0 : report_failure(status);
  }

  int exit_code = 0;
  const auto text = load_config_text(opt, exit_code);
  if (!text) return exit_code;

  const auto data = c_strings(opt.data);
  if (gen->parsed()) {
    status = koopid_cmd_generate(text->c_str(), print_line, &opt.verbose);
  } else if (ident->parsed()) {
    status = koopid_cmd_identify(text->c_str(), data.data(), data.size(), print_line, &opt.verbose);
  } else if (eval->parsed()) {
    const auto models = c_strings(opt.models);
    status = koopid_cmd_evaluate(text->c_str(), models.data(), models.size(), data.data(), data.size(), print_line,
                                 &opt.verbose);
  } else if (pipe->parsed()) {
    status = koopid_cmd_pipeline(text->c_str(), print_line, &opt.verbose);
  }
  return status == KOOPID_OK ? 0 : report_failure(status);
}
