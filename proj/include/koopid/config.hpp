#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "koopid/dataset.hpp"
#include "koopid/excitation.hpp"
#include "koopid/simulator.hpp"

namespace koopid {

inline constexpr int kConfigVersion = 1;

/// Every knob of a run. Mirrors the JSON config document one to one; see
/// configs/README.md for the schema.
struct RunConfig {
  std::uint64_t seed = 0;

  struct System {
    std::string name = "duffing";
    std::vector<double> params;
  } system;

  struct Excitation {
    std::vector<double> transition_periods = {4.0};  // one per trial, or one shared
    double lo = -1.0;
    double hi = 1.0;
    std::optional<double> offset_fraction;
    std::optional<std::size_t> channels;
  } excitation;

  struct Generation {
    std::size_t trials = 2;
    double duration = 120.0;
    std::vector<double> x0;  // empty means the origin
    double noise_std = 0.0;
  } generation;

  struct Dataset {
    double ts = 0.02;
    double filter_window = 1.0;
    double velocity_filter_window = 1.0;
    std::vector<std::size_t> velocity_columns;  // 1-based, as written in the config
    bool derive_velocity = false;
    std::size_t val_count = 3;
    double val_duration = 10.0;
  } dataset;

  std::vector<std::size_t> degrees = {3};
  double rcond = 1e-12;
  double step = 1e-3;
  double horizon = 10.0;

  struct Paths {
    std::vector<std::string> data;
    std::string out = "out";
  } paths;

  double transition_period(std::size_t trial) const;
  ExcitationConfig excitation_config(std::size_t trial) const;
  PreprocessOptions preprocess_options() const;
  OdeConfig ode_config() const { return OdeConfig{step}; }

  std::uint64_t table_seed(std::size_t trial) const;
  std::uint64_t noise_seed(std::size_t trial) const;
  std::uint64_t split_seed(std::size_t trial) const;
};

/// Parses and validates a config document. Unknown keys, a missing or
/// unsupported "version", wrong types and out-of-range values all raise
/// Error(kConfigError).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical JSON rendering (all keys, fixed order).
std::string config_to_json(const RunConfig& cfg);

}  // namespace koopid
