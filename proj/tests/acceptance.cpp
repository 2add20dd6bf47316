// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "koopid/basis.hpp"
#include "koopid/config.hpp"
#include "koopid/dataset.hpp"
#include "koopid/error.hpp"
#include "koopid/excitation.hpp"
#include "koopid/identification.hpp"
#include "koopid/metrics.hpp"
#include "koopid/numerics.hpp"
#include "koopid/pipeline.hpp"
#include "koopid/random.hpp"
#include "koopid/simulator.hpp"

namespace fs = std::filesystem;
using namespace koopid;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

// Smallest residual among 100 random perturbations of norm 1e-3, compared
// with the residual of the fitted matrix.
bool optimality_probe(const KoopmanModel& model, const SnapshotSet& s, std::uint64_t seed, std::string& note) {
  const Eigen::MatrixXd px = lifted_matrix(model.basis, s.x, s.u);
  const Eigen::MatrixXd py = lifted_matrix(model.basis, s.y, s.u);
  const double best = (px * model.koopman - py).norm();
  std::mt19937_64 rng(seed);
  double closest = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixXd delta = random_matrix(rng, model.koopman.rows(), model.koopman.cols());
    delta *= 1e-3 / delta.norm();
    closest = std::min(closest, (px * (model.koopman + delta) - py).norm());
  }
  note = "residual " + fmt("%.6g", best) + " vs best perturbed " + fmt("%.6g", closest);
  return best <= closest;
}

// ---- synthetic suites shared by several criteria ----------------------------

// Placeholder until the suite is built.
KoopmanModel empty_model() { return {MonomialBasis(1, 0, 1), 0.0, {}, {}, {}, {}}; }

struct LinearSuite {
  SnapshotSet snapshots;
  KoopmanModel model = empty_model();
  double seconds = 0.0;
};

struct DuffingSuite {
  RunConfig cfg;
  SnapshotSet snapshots;
  std::vector<Trajectory> trials;
  std::vector<Trajectory> validation;
  KoopmanModel cubic = empty_model();
  KoopmanModel linear = empty_model();
  EvaluationReport cubic_report;
  EvaluationReport linear_report;
  double seconds = 0.0;
};

// linear2d under seeded excitation, inputs held at Ts = 0.01, 2001 samples.
LinearSuite build_linear_suite() {
  const auto start = Clock::now();
  const double ts = 0.01;
  const std::size_t intervals = 2000;
  const ExcitationConfig exc{2.0, -1.0, 1.0, std::nullopt};
  const LookupTable table =
      build_lookup(derive_seed(7, 100), 1, lookup_columns_for(intervals * ts + exc.transition_period, 2.0), -1.0, 1.0);
  Eigen::MatrixXd u(static_cast<Eigen::Index>(intervals + 1), 1);
  for (std::size_t k = 0; k <= intervals; ++k) u.row(static_cast<Eigen::Index>(k)) = input_vector_at(table, exc, k * ts);
  const Trajectory traj =
      integrate(builtin_field("linear2d"), Eigen::Vector2d(0.5, 0.0), ZohInput{u, ts}, intervals * ts, OdeConfig{1e-3}, ts);
  std::vector<Trajectory> segs = {traj};
  LinearSuite s;
  s.snapshots = build_snapshots(segs);
  s.model = identify(s.snapshots, MonomialBasis(2, 1, 2));
  s.seconds = seconds_since(start);
  return s;
}

// The shipped duffing config, run in memory: generate, preprocess, split,
// identify w = 1 and w = 3, evaluate both on the held-out 10 s segments.
DuffingSuite build_duffing_suite(const fs::path& config_path, const fs::path& scratch) {
  const auto start = Clock::now();
  DuffingSuite s;
  s.cfg = load_config(config_path.string());
  s.cfg.paths.out = scratch.string();
  const LogSink quiet = [](LogLevel, const std::string&) {};
  const auto files = run_generate(s.cfg, quiet);
  const PreparedData data = prepare_data(s.cfg, files);
  s.trials = data.trials;
  s.snapshots = build_snapshots(data.train);
  s.cubic = identify(s.snapshots, MonomialBasis(2, 1, 3), s.cfg.rcond);
  s.linear = identify(s.snapshots, MonomialBasis(2, 1, 1), s.cfg.rcond);

  const auto horizon = static_cast<std::size_t>(std::llround(s.cfg.horizon / s.cfg.dataset.ts)) + 1;
  for (const auto& seg : data.validation) s.validation.push_back(seg.slice(0, std::min(seg.samples(), horizon)));
  const auto bounds = NormalizationBounds::from_trajectories(s.trials);
  s.cubic_report = evaluate_model(s.cubic, s.validation, bounds, s.cfg.ode_config(), "Koopman (w=3)");
  s.linear_report = evaluate_model(s.linear, s.validation, bounds, s.cfg.ode_config(), "Linear (w=1)");
  s.seconds = seconds_since(start);
  return s;
}

// ---- criteria ---------------------------------------------------------------

Outcome basis_cardinality() {
  std::vector<double> us;
  std::size_t n = 0;
  for (int rep = 0; rep < 11; ++rep) {
    const auto start = Clock::now();
    const MonomialBasis b(6, 3, 3);
    us.push_back(seconds_since(start) * 1e6);
    n = b.size();
  }
  std::nth_element(us.begin(), us.begin() + 5, us.end());
  const double median_ms = us[5] / 1000.0;
  return {n == 220 && median_ms < 1.0, "N = " + std::to_string(n) + ", median build " + fmt("%.3f", median_ms) + " ms"};
}

Outcome published_rows(const fs::path& fixture) {
  const auto doc = nlohmann::json::parse(slurp(fixture));
  const auto start = Clock::now();
  std::vector<std::string> mismatches;
  std::size_t checked = 0;
  for (const auto& row : doc) {
    std::vector<double> nrmse;
    for (const auto& s : row.at("per_state")) nrmse.push_back(s.at("nrmse").get<double>());
    const EvaluationReport r = aggregate_report(row.at("model").get<std::string>(), nrmse);
    const std::string avg = fmt("%.1f", r.avg_nrmse);
    const std::string sd = fmt("%.1f", r.std_nrmse);
    const auto want_avg = row.at("published_avg").get<std::string>();
    const auto want_std = row.at("published_std").get<std::string>();
    checked += 2;
    if (avg != want_avg) mismatches.push_back(r.model_name + " Avg. " + avg + " (table " + want_avg + ")");
    if (sd != want_std) mismatches.push_back(r.model_name + " Std. " + sd + " (table " + want_std + ")");
  }
  const double ms = seconds_since(start) * 1e3;
  std::string detail = std::to_string(checked - mismatches.size()) + "/" + std::to_string(checked) + " entries match";
  for (const auto& m : mismatches) detail += "; " + m;
  detail += " [" + fmt("%.3f", ms) + " ms]";
  return {mismatches.empty() && ms < 1.0, detail};
}

Outcome linear_recovery(const LinearSuite& s) {
  const MonomialBasis& b = s.model.basis;
  // x1' = x2 ; x2' = -2 x1 - 0.4 x2 + u
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.size()), 2);
  for (std::size_t k = 0; k < b.size(); ++k) {
    const auto& e = b.exponents()[k];
    const auto r = static_cast<Eigen::Index>(k);
    if (e == std::vector<int>{0, 1, 0}) truth(r, 0) = 1.0;
    if (e == std::vector<int>{1, 0, 0}) truth(r, 1) = -2.0;
    if (e == std::vector<int>{0, 1, 0}) truth(r, 1) = -0.4;
    if (e == std::vector<int>{0, 0, 1}) truth(r, 1) = 1.0;
  }
  const Eigen::MatrixXd err = (s.model.field - truth).cwiseAbs();
  double other = 0.0, active = 0.0;
  for (Eigen::Index i = 0; i < err.rows(); ++i)
    for (Eigen::Index j = 0; j < err.cols(); ++j) (truth(i, j) == 0.0 ? other : active) = std::max(truth(i, j) == 0.0 ? other : active, err(i, j));
  const bool pass = active <= 1e-4 && other <= 1e-4 && s.seconds < 5.0 && s.snapshots.size() == 2000;
  return {pass, "K = " + std::to_string(s.snapshots.size()) + ", max |W - W_true| on active terms " + fmt("%.2e", active) +
                    ", on inactive terms " + fmt("%.2e", other) + " (" + fmt("%.2f", s.seconds) + " s)"};
}

Outcome duffing_recovery(const DuffingSuite& s) {
  double worst = 0.0;
  std::string per;
  for (std::size_t i = 0; i < s.cubic_report.per_state.size(); ++i) {
    worst = std::max(worst, s.cubic_report.per_state[i].nrmse);
    per += (i ? ", x" : "x") + std::to_string(i + 1) + " " + fmt("%.3g", s.cubic_report.per_state[i].nrmse) + "%";
  }
  const bool pass = worst <= 2.0 && s.cubic_report.diverged == 0 && s.seconds < 60.0;
  return {pass, "K = " + std::to_string(s.snapshots.size()) + ", " + std::to_string(s.cubic_report.segments) +
                    " segments, NRMSE " + per + " (" + fmt("%.2f", s.seconds) + " s)"};
}

Outcome degree_sensitivity(const DuffingSuite& s) {
  const double lin = s.linear_report.avg_nrmse;
  const double cub = s.cubic_report.avg_nrmse;
  return {lin >= 2.0 * cub && s.seconds < 60.0,
          "avg NRMSE w=1 " + fmt("%.3g", lin) + "% vs w=3 " + fmt("%.3g", cub) + "% (ratio " +
              (cub > 0 ? fmt("%.3g", lin / cub) : std::string("inf")) + ")"};
}

Outcome roundtrip(const std::vector<const KoopmanModel*>& models) {
  double worst_model = 0.0;
  for (const auto* m : models) {
    worst_model = std::max(worst_model, (matrix_exp(m->ts * m->generator) - m->koopman).norm() / m->koopman.norm());
  }
  std::mt19937_64 rng(6);
  double worst_random = 0.0;
  int failures = 0;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index n = 2 + k % 15;
    Eigen::MatrixXd g = random_matrix(rng, n, n);
    g *= (0.05 + 0.95 * k / 49.0) / g.norm();
    try {
      const Eigen::MatrixXd u = matrix_exp(g);
      const double e1 = (matrix_log(u) - g).norm() / std::max(g.norm(), 1.0);
      const double e2 = (matrix_exp(matrix_log(u)) - u).norm() / u.norm();
      worst_random = std::max({worst_random, e1, e2});
    } catch (const Error&) {
      ++failures;
    }
  }
  return {worst_model <= 1e-8 && worst_random <= 1e-8 && failures == 0,
          std::to_string(models.size()) + " fitted models worst " + fmt("%.2e", worst_model) +
              "; 50 random generators worst " + fmt("%.2e", worst_random) +
              (failures ? ", " + std::to_string(failures) + " log failures" : std::string())};
}

Outcome optimality(const LinearSuite& lin, const DuffingSuite& duf) {
  std::string a, b;
  const bool p1 = optimality_probe(lin.model, lin.snapshots, 71, a);
  const bool p2 = optimality_probe(duf.cubic, duf.snapshots, 72, b);
  return {p1 && p2, "linear2d: " + a + "; duffing: " + b};
}

Outcome gradient_check() {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (auto [n, m, w] : {std::tuple{2, 1, 3}, std::tuple{3, 2, 2}, std::tuple{6, 3, 3}}) {
    const MonomialBasis b(n, m, w);
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd x = random_matrix(rng, n, 1);
      const Eigen::VectorXd u = random_matrix(rng, m, 1);
      const Eigen::MatrixXd g = b.lift_gradient(x, u);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        worst = std::max(worst, ((b.lift(xp, u) - b.lift(xm, u)) / 2e-6 - g.col(i)).cwiseAbs().maxCoeff());
      }
    }
  }
  return {worst <= 1e-6, "max |FD - gradient| = " + fmt("%.2e", worst) + " over 300 points"};
}

struct FieldGap {
  double worst = 0.0;
  std::size_t deficient = 0;
};

FieldGap field_gap(const KoopmanModel& model, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double ulo,
                   double uhi, double rcond, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FieldGap gap;
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, ulo + (uhi - ulo) * unit(rng));
    const auto p = evaluate_field_pointwise(model.generator, model.basis, x, u, rcond);
    gap.deficient += p.rank_deficient;
    gap.worst = std::max(gap.worst, (p.value - model.vector_field(x, u)).cwiseAbs().maxCoeff());
  }
  return gap;
}

Outcome pointwise_consistency(const DuffingSuite& s, const LinearSuite& lin) {
  // points drawn from the region the data covers
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (const auto& t : s.trials) {
    lo = lo.cwiseMin(t.states.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(t.states.colwise().maxCoeff().transpose());
  }
  const FieldGap duf = field_gap(s.cubic, lo, hi, s.cfg.excitation.lo, s.cfg.excitation.hi, s.cfg.rcond, 9);
  // reference point: a system whose lifted span is closed under its generator
  const FieldGap ref =
      field_gap(lin.model, Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0), -1.0, 1.0, 1e-12, 10);
  return {duf.worst <= 1e-6 && duf.deficient == 0,
          "max |pointwise - W^T psi| = " + fmt("%.3e", duf.worst) + " over 100 points" +
              (duf.deficient ? ", " + std::to_string(duf.deficient) + " rank-deficient" : std::string()) +
              " (linear2d, invariant span: " + fmt("%.2e", ref.worst) + ")"};
}

Outcome failure_path() {
  // similarity transform of diag(1, 0.9, -0.5, 0.7): one negative real eigenvalue
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd v = random_matrix(rng, 4, 4) + 3.0 * Eigen::MatrixXd::Identity(4, 4);
  Eigen::Vector4d d(1.0, 0.9, -0.5, 0.7);
  const Eigen::MatrixXd u = v * d.asDiagonal() * v.inverse();
  try {
    compute_generator(u, 0.02);
    return {false, "no error raised"};
  } catch (const SpectrumError& e) {
    bool has_negative = false;
    for (const auto& l : e.offending()) has_negative = has_negative || (std::abs(l.real() + 0.5) < 1e-9 && std::abs(l.imag()) < 1e-9);
    const bool pass = e.code() == ErrorCode::kInsufficientData && e.spectrum().size() == 4 && has_negative;
    return {pass, std::string(error_code_name(e.code())) + " with " + std::to_string(e.spectrum().size()) +
                      " eigenvalues, offending " + std::to_string(e.offending().size())};
  } catch (const Error& e) {
    return {false, std::string("wrong error: ") + e.what()};
  }
}

Outcome moore_penrose() {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  std::size_t tall = 0, wide = 0, deficient = 0;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index rows = 1 + static_cast<Eigen::Index>(rng() % 30);
    const Eigen::Index cols = 1 + static_cast<Eigen::Index>(rng() % 30);
    Eigen::MatrixXd m;
    if (k % 3 == 2) {
      const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng() % std::max<Eigen::Index>(1, std::min(rows, cols) - 1));
      m = random_matrix(rng, rows, r) * random_matrix(rng, r, cols);
      deficient += r < std::min(rows, cols);
    } else {
      m = random_matrix(rng, rows, cols);
    }
    tall += rows > cols;
    wide += rows < cols;
    const Eigen::MatrixXd p = pseudoinverse(m);
    worst = std::max({worst, (m * p * m - m).norm(), (p * m * p - p).norm(), ((m * p).transpose() - m * p).norm(),
                      ((p * m).transpose() - p * m).norm()});
  }
  return {worst <= 1e-9, "50 matrices (" + std::to_string(tall) + " tall, " + std::to_string(wide) + " wide, " +
                             std::to_string(deficient) + " rank-deficient), worst condition residual " + fmt("%.2e", worst)};
}

Outcome determinism(const fs::path& config_path, const fs::path& scratch) {
  RunConfig cfg = load_config(config_path.string());
  const LogSink quiet = [](LogLevel, const std::string&) {};
  std::vector<std::string> tables, jsons;
  for (int run = 0; run < 2; ++run) {
    cfg.paths.out = (scratch / ("run" + std::to_string(run))).string();
    fs::remove_all(cfg.paths.out);
    run_pipeline(cfg, quiet);
    tables.push_back(slurp(fs::path(cfg.paths.out) / "comparison.txt"));
    jsons.push_back(slurp(fs::path(cfg.paths.out) / "comparison.json"));
  }
  const bool same = tables[0] == tables[1] && jsons[0] == jsons[1] && !tables[0].empty();
  return {same, same ? "comparison.txt and comparison.json byte-identical across two runs" : "outputs differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path(KOOPID_SOURCE_DIR);
  const fs::path scratch = fs::temp_directory_path() / "koopid_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const fs::path duffing_cfg = root / "configs" / "duffing.json";

  int failed = 0;
  auto report = [&](int id, const char* title, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
    std::fflush(stdout);
  };

  std::optional<LinearSuite> lin;
  std::optional<DuffingSuite> duf;
  std::string lin_error, duf_error;
  try {
    lin = build_linear_suite();
  } catch (const std::exception& e) {
    lin_error = e.what();
  }
  try {
    duf = build_duffing_suite(duffing_cfg, scratch / "suite");
  } catch (const std::exception& e) {
    duf_error = e.what();
  }
  auto need_lin = [&]() -> const LinearSuite& {
    if (!lin) throw std::runtime_error("linear suite failed: " + lin_error);
    return *lin;
  };
  auto need_duf = [&]() -> const DuffingSuite& {
    if (!duf) throw std::runtime_error("duffing suite failed: " + duf_error);
    return *duf;
  };

  report(1, "Basis cardinality", basis_cardinality);
  report(2, "Published comparison aggregation", [&] { return published_rows(root / "fixtures" / "published_nrmse.json"); });
  report(3, "Linear exact recovery", [&] { return linear_recovery(need_lin()); });
  report(4, "Polynomial-in-span recovery", [&] { return duffing_recovery(need_duf()); });
  report(5, "Degree sensitivity", [&] { return degree_sensitivity(need_duf()); });
  report(6, "exp/log round trip", [&] {
    const auto& l = need_lin();
    const auto& d = need_duf();
    return roundtrip({&l.model, &d.cubic, &d.linear});
  });
  report(7, "Regression optimality probe", [&] { return optimality(need_lin(), need_duf()); });
  report(8, "Gradient check", gradient_check);
  report(9, "Pointwise/global field consistency", [&] { return pointwise_consistency(need_duf(), need_lin()); });
  report(10, "Failure-path fidelity", failure_path);
  report(11, "Moore-Penrose suite", moore_penrose);
  report(12, "End-to-end determinism", [&] { return determinism(duffing_cfg, scratch / "determinism"); });

  std::printf("%d/12 criteria passed\n", 12 - failed);
  return failed == 0 ? 0 : 1;
}
