#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "koopid/dataset.hpp"
#include "koopid/excitation.hpp"
#include "koopid/identification.hpp"

namespace koopid {

/// Continuous-time field dx/dt = F(x, u).
class VectorField {
 public:
  using Fn = std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx)>;

  VectorField(std::string name, std::size_t n, std::size_t m, Fn fn)
      : name_(std::move(name)), n_(n), m_(m), fn_(std::move(fn)) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t state_dim() const noexcept { return n_; }
  std::size_t input_dim() const noexcept { return m_; }

  void operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx) const { fn_(x, u, dx); }
  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    Eigen::VectorXd dx(static_cast<Eigen::Index>(n_));
    fn_(x, u, dx);
    return dx;
  }

 private:
  std::string name_;
  std::size_t n_;
  std::size_t m_;
  Fn fn_;
};

/// Registered ground-truth systems (all n = 2, m = 1):
///   linear2d   x1' = x2, x2' = a x1 + b x2 + u           params [a, b], default [-2, -0.4]
///   duffing    x1' = x2, x2' = -k1 x1 - k3 x1^3 - c x2 + u params [k1, k3, c], default [1, 1, 0.5]
///   vanderpol  x1' = x2, x2' = mu (1 - x1^2) x2 - x1 + u   params [mu], default [1]
/// An empty parameter list selects the defaults.
VectorField builtin_field(std::string_view name, std::span<const double> params = {});
std::vector<std::string> builtin_names();

/// F(x, u) = W^T psi(x, u) of an identified model.
VectorField koopman_field(const KoopmanModel& model);

/// Inputs held constant over [t0 + k ts, t0 + (k+1) ts); row k is u_k.
struct ZohInput {
  Eigen::MatrixXd samples;
  double ts = 0.0;
};

struct ExcitationInput {
  LookupTable table;
  ExcitationConfig config;
};

struct ConstantInput {
  Eigen::VectorXd value;
};

using InputSignal = std::variant<ZohInput, ExcitationInput, ConstantInput>;

struct OdeConfig {
  double step = 1e-3;
};

/// Classical fixed-step RK4 from t = 0, output every ts_out seconds.
///
/// ts_out must be an integer multiple of cfg.step. For ZOH inputs every RK4
/// stage inside an output interval uses the left sample; excitation inputs
/// are evaluated at each stage time. The recorded input of output sample k
/// is the input value at its sample time. Throws DivergenceError once any
/// state magnitude exceeds 1e12 or becomes non-finite.
Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0, const InputSignal& input,
                     double duration, const OdeConfig& cfg, double ts_out);

/// Simulates an identified model under recorded ZOH inputs (T x m, sampled at
/// model.ts); returns T samples starting at x0.
Trajectory simulate_model(const KoopmanModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& inputs,
                          const OdeConfig& cfg);

inline constexpr double kDivergenceBound = 1e12;

}  // namespace koopid
