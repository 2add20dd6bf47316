#include "koopid/simulator.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "koopid/error.hpp"

namespace koopid {
namespace {

std::vector<double> resolve_params(std::string_view name, std::span<const double> given,
                                   std::vector<double> defaults) {
  if (given.empty()) return defaults;
  if (given.size() != defaults.size()) {
    throw Error(ErrorCode::kBadParamCount, std::string(name) + " takes " + std::to_string(defaults.size()) +
                                               " parameters, got " + std::to_string(given.size()));
  }
  return {given.begin(), given.end()};
}

std::size_t steps_per_interval(double ts_out, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "integrate: step must be positive");
  if (!(ts_out > 0.0)) throw Error(ErrorCode::kInvalidArgument, "integrate: output period must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(ts_out / step));
  if (steps == 0 || std::abs(static_cast<double>(steps) * step - ts_out) > 1e-9 * ts_out) {
    throw Error(ErrorCode::kInvalidArgument, "integrate: output period " + std::to_string(ts_out) +
                                                 " is not a multiple of the step " + std::to_string(step));
  }
  return steps;
}

bool diverged(const Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceBound) return true;
  }
  return false;
}

}  // namespace

VectorField builtin_field(std::string_view name, std::span<const double> params) {
  if (name == "linear2d") {
    const auto p = resolve_params(name, params, {-2.0, -0.4});
    return VectorField("linear2d", 2, 1, [a = p[0], b = p[1]](const auto& x, const auto& u, auto& dx) {
      dx[0] = x[1];
      dx[1] = a * x[0] + b * x[1] + u[0];
    });
  }
  if (name == "duffing") {
    const auto p = resolve_params(name, params, {1.0, 1.0, 0.5});
    return VectorField("duffing", 2, 1, [k1 = p[0], k3 = p[1], c = p[2]](const auto& x, const auto& u, auto& dx) {
      dx[0] = x[1];
      dx[1] = -k1 * x[0] - k3 * x[0] * x[0] * x[0] - c * x[1] + u[0];
    });
  }
  if (name == "vanderpol") {
    const auto p = resolve_params(name, params, {1.0});
    return VectorField("vanderpol", 2, 1, [mu = p[0]](const auto& x, const auto& u, auto& dx) {
      dx[0] = x[1];
      dx[1] = mu * (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0];
    });
  }
  throw Error(ErrorCode::kUnknownSystem, "unknown system '" + std::string(name) + "'");
}

std::vector<std::string> builtin_names() { return {"linear2d", "duffing", "vanderpol"}; }

VectorField koopman_field(const KoopmanModel& model) {
  auto shared = std::make_shared<const KoopmanModel>(model);
  const std::size_t nb = model.basis.size();
  return VectorField("koopman", model.state_dim(), model.input_dim(),
                     [shared, nb](const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx) {
                       thread_local std::vector<double> psi;
                       psi.resize(nb);
                       shared->basis.lift_into({x.data(), static_cast<std::size_t>(x.size())},
                                               {u.data(), static_cast<std::size_t>(u.size())}, psi);
                       dx.noalias() = shared->field.transpose() *
                                      Eigen::Map<const Eigen::VectorXd>(psi.data(), static_cast<Eigen::Index>(nb));
                     });
}

Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0, const InputSignal& input,
                     double duration, const OdeConfig& cfg, double ts_out) {
  if (!(duration > 0.0)) throw Error(ErrorCode::kInvalidArgument, "integrate: duration must be positive");
  if (static_cast<std::size_t>(x0.size()) != field.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "integrate: initial state has wrong dimension");
  }
  if (diverged(x0)) throw DivergenceError("integrate: initial state is not finite", 0.0);
  const std::size_t substeps = steps_per_interval(ts_out, cfg.step);
  const double h = ts_out / static_cast<double>(substeps);
  const auto intervals = static_cast<std::size_t>(std::llround(duration / ts_out));
  if (intervals == 0) throw Error(ErrorCode::kInvalidArgument, "integrate: duration shorter than one period");
  const auto m = static_cast<Eigen::Index>(field.input_dim());

  if (const auto* zoh = std::get_if<ZohInput>(&input)) {
    if (zoh->samples.cols() != m) throw Error(ErrorCode::kDimensionMismatch, "integrate: ZOH input has wrong width");
    if (static_cast<std::size_t>(zoh->samples.rows()) < intervals) {
      throw Error(ErrorCode::kDimensionMismatch, "integrate: ZOH samples do not cover the horizon");
    }
    if (std::abs(zoh->ts - ts_out) > 1e-12 * ts_out) {
      throw Error(ErrorCode::kMixedSamplingPeriod, "integrate: ZOH period differs from the output period");
    }
  } else if (const auto* c = std::get_if<ConstantInput>(&input)) {
    if (c->value.size() != m) throw Error(ErrorCode::kDimensionMismatch, "integrate: constant input has wrong width");
  } else if (const auto* e = std::get_if<ExcitationInput>(&input)) {
    if (static_cast<Eigen::Index>(e->table.channels()) != m) {
      throw Error(ErrorCode::kDimensionMismatch, "integrate: excitation channel count differs from m");
    }
  }

  // Input at time t inside output interval k.
  auto input_at_time = [&](std::size_t k, double t) -> Eigen::VectorXd {
    return std::visit(
        [&](const auto& sig) -> Eigen::VectorXd {
          using T = std::decay_t<decltype(sig)>;
          if constexpr (std::is_same_v<T, ZohInput>) {
            const auto row = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), sig.samples.rows() - 1);
            return sig.samples.row(row).transpose();
          } else if constexpr (std::is_same_v<T, ExcitationInput>) {
            return input_vector_at(sig.table, sig.config, t);
          } else {
            return sig.value;
          }
        },
        input);
  };
  const bool time_varying = std::holds_alternative<ExcitationInput>(input);

  Trajectory traj;
  traj.ts = ts_out;
  traj.t0 = 0.0;
  traj.states.resize(static_cast<Eigen::Index>(intervals + 1), x0.size());
  traj.inputs.resize(static_cast<Eigen::Index>(intervals + 1), m);

  const auto n = x0.size();
  Eigen::VectorXd x = x0, k1(n), k2(n), k3(n), k4(n), tmp(n);
  traj.states.row(0) = x.transpose();
  traj.inputs.row(0) = input_at_time(0, 0.0).transpose();
  for (std::size_t k = 0; k < intervals; ++k) {
    const double t_start = static_cast<double>(k) * ts_out;
    Eigen::VectorXd u = input_at_time(k, t_start);
    for (std::size_t s = 0; s < substeps; ++s) {
      const double t = t_start + static_cast<double>(s) * h;
      if (time_varying) u = input_at_time(k, t);
      field(x, u, k1);
      if (time_varying) u = input_at_time(k, t + 0.5 * h);
      tmp = x + 0.5 * h * k1;
      field(tmp, u, k2);
      tmp = x + 0.5 * h * k2;
      field(tmp, u, k3);
      if (time_varying) u = input_at_time(k, t + h);
      tmp = x + h * k3;
      field(tmp, u, k4);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (diverged(x)) {
        const double when = t + h;
        throw DivergenceError("integrate: state diverged at t=" + std::to_string(when), when);
      }
    }
    const double t_next = static_cast<double>(k + 1) * ts_out;
    traj.states.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
    traj.inputs.row(static_cast<Eigen::Index>(k + 1)) = input_at_time(k + 1, t_next).transpose();
  }
  return traj;
}

Trajectory simulate_model(const KoopmanModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& inputs,
                          const OdeConfig& cfg) {
  if (static_cast<std::size_t>(inputs.cols()) != model.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "simulate: input width differs from the model");
  }
  if (inputs.rows() < 2) throw Error(ErrorCode::kTooFewSamples, "simulate: need at least two input samples");
  const auto intervals = static_cast<double>(inputs.rows() - 1);
  Trajectory traj = integrate(koopman_field(model), x0, ZohInput{inputs, model.ts}, intervals * model.ts, cfg,
                              model.ts);
  traj.inputs = inputs;
  return traj;
}

}  // namespace koopid
