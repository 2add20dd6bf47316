#include "koopid/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "koopid/error.hpp"
#include "koopid/random.hpp"

namespace koopid {
namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfigError, "config: " + what); }

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!keys.count(key)) config_error("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

double positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) config_error(what + " must be positive");
  return v;
}

double non_negative(double v, const std::string& what) {
  if (!(v >= 0.0) || !std::isfinite(v)) config_error(what + " must be >= 0");
  return v;
}

}  // namespace

double RunConfig::transition_period(std::size_t trial) const {
  if (excitation.transition_periods.size() == 1) return excitation.transition_periods.front();
  return excitation.transition_periods.at(trial);
}

ExcitationConfig RunConfig::excitation_config(std::size_t trial) const {
  ExcitationConfig cfg;
  cfg.transition_period = transition_period(trial);
  cfg.lo = excitation.lo;
  cfg.hi = excitation.hi;
  cfg.offset_fraction = excitation.offset_fraction;
  return cfg;
}

PreprocessOptions RunConfig::preprocess_options() const {
  PreprocessOptions opt;
  opt.ts = dataset.ts;
  opt.filter_window = dataset.filter_window;
  opt.velocity_filter_window = dataset.velocity_filter_window;
  for (std::size_t c : dataset.velocity_columns) opt.velocity_columns.push_back(c - 1);
  opt.derive_velocity = dataset.derive_velocity;
  return opt;
}

std::uint64_t RunConfig::table_seed(std::size_t trial) const { return derive_seed(seed, 100 + trial); }
std::uint64_t RunConfig::noise_seed(std::size_t trial) const { return derive_seed(seed, 200 + trial); }
std::uint64_t RunConfig::split_seed(std::size_t trial) const { return derive_seed(seed, 300 + trial); }

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "", {"version", "seed", "system", "excitation", "generation", "dataset", "basis",
                           "identification", "simulation", "evaluation", "paths"});
  if (!doc.contains("version")) config_error("missing mandatory key 'version'");
  if (get<int>(doc, "version", "", 0) != kConfigVersion) {
    config_error("unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  }

  RunConfig cfg;
  cfg.seed = get<std::uint64_t>(doc, "seed", "", cfg.seed);

  if (doc.contains("system")) {
    const json& s = doc["system"];
    reject_unknown(s, "system", {"name", "params"});
    cfg.system.name = get<std::string>(s, "name", "system", cfg.system.name);
    cfg.system.params = get<std::vector<double>>(s, "params", "system", {});
  }
  VectorField field = [&] {
    try {
      return builtin_field(cfg.system.name, cfg.system.params);
    } catch (const Error& e) {
      config_error(e.what());
    }
  }();

  if (doc.contains("excitation")) {
    const json& e = doc["excitation"];
    reject_unknown(e, "excitation", {"tu", "lo", "hi", "offset_fraction", "channels"});
    if (e.contains("tu")) {
      if (e["tu"].is_array()) {
        cfg.excitation.transition_periods = get<std::vector<double>>(e, "tu", "excitation", {});
      } else {
        cfg.excitation.transition_periods = {get<double>(e, "tu", "excitation", 0.0)};
      }
    }
    cfg.excitation.lo = get<double>(e, "lo", "excitation", cfg.excitation.lo);
    cfg.excitation.hi = get<double>(e, "hi", "excitation", cfg.excitation.hi);
    if (e.contains("offset_fraction") && !e["offset_fraction"].is_null()) {
      cfg.excitation.offset_fraction = get<double>(e, "offset_fraction", "excitation", 0.0);
    }
    if (e.contains("channels") && !e["channels"].is_null()) {
      cfg.excitation.channels = get<std::size_t>(e, "channels", "excitation", 0);
    }
  }
  if (doc.contains("generation")) {
    const json& g = doc["generation"];
    reject_unknown(g, "generation", {"trials", "duration", "x0", "noise_std"});
    cfg.generation.trials = get<std::size_t>(g, "trials", "generation", cfg.generation.trials);
    cfg.generation.duration = get<double>(g, "duration", "generation", cfg.generation.duration);
    cfg.generation.x0 = get<std::vector<double>>(g, "x0", "generation", {});
    cfg.generation.noise_std = get<double>(g, "noise_std", "generation", cfg.generation.noise_std);
  }
  if (doc.contains("dataset")) {
    const json& d = doc["dataset"];
    reject_unknown(d, "dataset", {"ts", "filter_window", "velocity_filter_window", "velocity_columns",
                                  "derive_velocity", "val_count", "val_duration"});
    cfg.dataset.ts = get<double>(d, "ts", "dataset", cfg.dataset.ts);
    cfg.dataset.filter_window = get<double>(d, "filter_window", "dataset", cfg.dataset.filter_window);
    cfg.dataset.velocity_filter_window =
        get<double>(d, "velocity_filter_window", "dataset", cfg.dataset.velocity_filter_window);
    cfg.dataset.velocity_columns = get<std::vector<std::size_t>>(d, "velocity_columns", "dataset", {});
    cfg.dataset.derive_velocity = get<bool>(d, "derive_velocity", "dataset", cfg.dataset.derive_velocity);
    cfg.dataset.val_count = get<std::size_t>(d, "val_count", "dataset", cfg.dataset.val_count);
    cfg.dataset.val_duration = get<double>(d, "val_duration", "dataset", cfg.dataset.val_duration);
  }
  if (doc.contains("basis")) {
    const json& b = doc["basis"];
    reject_unknown(b, "basis", {"w"});
    if (b.contains("w")) {
      cfg.degrees = b["w"].is_array() ? get<std::vector<std::size_t>>(b, "w", "basis", {})
                                      : std::vector<std::size_t>{get<std::size_t>(b, "w", "basis", 0)};
    }
  }
  if (doc.contains("identification")) {
    const json& i = doc["identification"];
    reject_unknown(i, "identification", {"rcond"});
    cfg.rcond = get<double>(i, "rcond", "identification", cfg.rcond);
  }
  if (doc.contains("simulation")) {
    const json& s = doc["simulation"];
    reject_unknown(s, "simulation", {"step"});
    cfg.step = get<double>(s, "step", "simulation", cfg.step);
  }
  if (doc.contains("evaluation")) {
    const json& e = doc["evaluation"];
    reject_unknown(e, "evaluation", {"horizon"});
    cfg.horizon = get<double>(e, "horizon", "evaluation", cfg.horizon);
  }
  if (doc.contains("paths")) {
    const json& p = doc["paths"];
    reject_unknown(p, "paths", {"data", "out"});
    cfg.paths.data = get<std::vector<std::string>>(p, "data", "paths", {});
    cfg.paths.out = get<std::string>(p, "out", "paths", cfg.paths.out);
  }

  // Range checks.
  if (cfg.excitation.transition_periods.empty()) config_error("excitation.tu must not be empty");
  for (double tu : cfg.excitation.transition_periods) positive(tu, "excitation.tu");
  if (cfg.excitation.transition_periods.size() != 1 &&
      cfg.excitation.transition_periods.size() != cfg.generation.trials) {
    config_error("excitation.tu lists " + std::to_string(cfg.excitation.transition_periods.size()) +
                 " periods for " + std::to_string(cfg.generation.trials) + " trials");
  }
  if (!(cfg.excitation.lo < cfg.excitation.hi)) config_error("excitation.lo must be below excitation.hi");
  if (cfg.excitation.offset_fraction &&
      !(*cfg.excitation.offset_fraction >= 0.0 && *cfg.excitation.offset_fraction < 1.0)) {
    config_error("excitation.offset_fraction must lie in [0, 1)");
  }
  if (cfg.excitation.channels && *cfg.excitation.channels != field.input_dim()) {
    config_error("excitation.channels is " + std::to_string(*cfg.excitation.channels) + " but system '" +
                 cfg.system.name + "' has " + std::to_string(field.input_dim()) + " inputs");
  }
  if (cfg.generation.trials == 0) config_error("generation.trials must be >= 1");
  positive(cfg.generation.duration, "generation.duration");
  if (!cfg.generation.x0.empty() && cfg.generation.x0.size() != field.state_dim()) {
    config_error("generation.x0 must have " + std::to_string(field.state_dim()) + " entries");
  }
  non_negative(cfg.generation.noise_std, "generation.noise_std");
  positive(cfg.dataset.ts, "dataset.ts");
  non_negative(cfg.dataset.filter_window, "dataset.filter_window");
  non_negative(cfg.dataset.velocity_filter_window, "dataset.velocity_filter_window");
  for (std::size_t c : cfg.dataset.velocity_columns) {
    if (c == 0) config_error("dataset.velocity_columns are 1-based");
  }
  if (cfg.dataset.val_count > 0) positive(cfg.dataset.val_duration, "dataset.val_duration");
  if (cfg.degrees.empty()) config_error("basis.w must list at least one degree");
  for (std::size_t w : cfg.degrees) {
    if (w == 0) config_error("basis.w entries must be >= 1");
  }
  non_negative(cfg.rcond, "identification.rcond");
  positive(cfg.step, "simulation.step");
  const double ratio = cfg.dataset.ts / cfg.step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
    config_error("simulation.step must divide dataset.ts");
  }
  positive(cfg.horizon, "evaluation.horizon");
  if (cfg.paths.out.empty()) config_error("paths.out must not be empty");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const RunConfig& cfg) {
  json doc;
  doc["version"] = kConfigVersion;
  doc["seed"] = cfg.seed;
  doc["system"] = {{"name", cfg.system.name}, {"params", cfg.system.params}};
  json tu = cfg.excitation.transition_periods.size() == 1 ? json(cfg.excitation.transition_periods.front())
                                                           : json(cfg.excitation.transition_periods);
  doc["excitation"] = {{"tu", tu},
                       {"lo", cfg.excitation.lo},
                       {"hi", cfg.excitation.hi},
                       {"offset_fraction", cfg.excitation.offset_fraction ? json(*cfg.excitation.offset_fraction)
                                                                          : json(nullptr)},
                       {"channels", cfg.excitation.channels ? json(*cfg.excitation.channels) : json(nullptr)}};
  doc["generation"] = {{"trials", cfg.generation.trials},
                       {"duration", cfg.generation.duration},
                       {"x0", cfg.generation.x0},
                       {"noise_std", cfg.generation.noise_std}};
  doc["dataset"] = {{"ts", cfg.dataset.ts},
                    {"filter_window", cfg.dataset.filter_window},
                    {"velocity_filter_window", cfg.dataset.velocity_filter_window},
                    {"velocity_columns", cfg.dataset.velocity_columns},
                    {"derive_velocity", cfg.dataset.derive_velocity},
                    {"val_count", cfg.dataset.val_count},
                    {"val_duration", cfg.dataset.val_duration}};
  doc["basis"] = {{"w", cfg.degrees}};
  doc["identification"] = {{"rcond", cfg.rcond}};
  doc["simulation"] = {{"step", cfg.step}};
  doc["evaluation"] = {{"horizon", cfg.horizon}};
  doc["paths"] = {{"data", cfg.paths.data}, {"out", cfg.paths.out}};
  return doc.dump(2) + "\n";
}

}  // namespace koopid
