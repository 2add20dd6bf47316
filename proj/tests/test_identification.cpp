#include <cmath>
#include <filesystem>
#include <random>

#include "koopid/identification.hpp"
#include "koopid/numerics.hpp"
#include "koopid/simulator.hpp"
#include "test_util.hpp"

using namespace koopid;

namespace {

SnapshotSet decay_snapshots() {
  SnapshotSet s;
  s.x = Eigen::MatrixXd(2, 1);
  s.x << 1.0, 0.5;
  s.y = Eigen::MatrixXd(2, 1);
  s.y << 0.5, 0.25;
  s.u = Eigen::MatrixXd(2, 0);
  s.ts = 1.0;
  return s;
}

// Noiseless snapshots of `field` under held random inputs.
SnapshotSet simulated_snapshots(const VectorField& field, std::size_t samples, double ts, std::uint64_t seed,
                                double amplitude = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  Eigen::MatrixXd held(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(field.input_dim()));
  for (Eigen::Index k = 0; k < held.rows(); ++k) {
    // change the input every 20 samples so the state has time to move
    for (Eigen::Index j = 0; j < held.cols(); ++j) held(k, j) = (k % 20 == 0 || k == 0) ? dist(rng) : held(k - 1, j);
  }
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(field.state_dim()));
  x0[0] = 0.5;
  const Trajectory t = integrate(field, x0, ZohInput{held, ts}, ts * static_cast<double>(samples - 1),
                                 OdeConfig{ts / 10.0}, ts);
  std::vector<Trajectory> segs = {t};
  return build_snapshots(segs);
}

}  // namespace

TEST(Identification, DecayKoopmanMatrix) {
  const MonomialBasis basis(1, 0, 1);
  const KoopmanFit fit = fit_koopman(decay_snapshots(), basis);
  Eigen::Matrix2d expected;
  expected << 1, 0, 0, 0.5;
  EXPECT_LE((fit.koopman - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(fit.rank, 2u);
  EXPECT_LE(fit.residual, 1e-14);
}

TEST(Identification, IdentityMapGivesIdentity) {
  std::mt19937_64 rng(3);
  SnapshotSet s;
  s.x = testutil::random_matrix(rng, 200, 2);
  s.u = testutil::random_matrix(rng, 200, 1);
  s.y = s.x;
  s.ts = 0.1;
  const MonomialBasis basis(2, 1, 2);
  const KoopmanModel model = identify(s, basis);
  const auto n = static_cast<Eigen::Index>(basis.size());
  EXPECT_LE((model.koopman - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(model.generator.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(model.field.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Identification, LinearOneStepPredictions) {
  const MonomialBasis basis(2, 1, 1);
  const SnapshotSet s = simulated_snapshots(builtin_field("linear2d"), 600, 0.05, 17);
  const KoopmanFit fit = fit_koopman(s, basis);
  const Eigen::MatrixXd px = lifted_matrix(basis, s.x, s.u);
  const Eigen::MatrixXd py = lifted_matrix(basis, s.y, s.u);
  EXPECT_LE((px * fit.koopman - py).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Identification, DiagonalGenerator) {
  Eigen::Matrix2d u;
  u << 1, 0, 0, 0.5;
  const Eigen::MatrixXd a = compute_generator(u, 1.0);
  EXPECT_NEAR(a(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(a(1, 1), -0.6931471805599453, 1e-14);
  EXPECT_NEAR(a(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(a(1, 0), 0.0, 1e-15);
  EXPECT_LE(compute_generator(Eigen::MatrixXd::Identity(4, 4), 0.1).norm(), 1e-15);
}

TEST(Identification, NegativeEigenvalueIsInsufficientData) {
  Eigen::Matrix2d u;
  u << 1, 0, 0, -0.2;
  try {
    compute_generator(u, 0.1);
    FAIL() << "expected InsufficientData";
  } catch (const SpectrumError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
    EXPECT_NE(std::string(e.what()).find("more system measurements can be taken"), std::string::npos);
    ASSERT_EQ(e.spectrum().size(), 2u);
    ASSERT_EQ(e.offending().size(), 1u);
    EXPECT_NEAR(e.offending()[0].real(), -0.2, 1e-12);
  }
}

TEST(Identification, IdentifyPreservesErrorTypeAndStage) {
  // y = -0.2 x makes the fitted U carry a negative eigenvalue
  SnapshotSet s;
  s.x = Eigen::MatrixXd(3, 1);
  s.x << 1.0, -0.2, 0.04;
  s.y = -0.2 * s.x;
  s.u = Eigen::MatrixXd(3, 0);
  s.ts = 0.5;
  try {
    identify(s, MonomialBasis(1, 0, 1));
    FAIL() << "expected InsufficientData";
  } catch (const SpectrumError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
    EXPECT_NE(std::string(e.what()).find("identify [generator]"), std::string::npos);
    EXPECT_FALSE(e.spectrum().empty());
  }
}

TEST(Identification, DecayVectorField) {
  const KoopmanModel model = identify(decay_snapshots(), MonomialBasis(1, 0, 1));
  ASSERT_EQ(model.field.rows(), 2);
  ASSERT_EQ(model.field.cols(), 1);
  EXPECT_NEAR(model.field(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(model.field(1, 0), -0.6931471805599453, 1e-13);
  EXPECT_NEAR(model.koopman(1, 1), 0.5, 1e-14);
  EXPECT_NEAR(model.generator(1, 1), -0.6931471805599453, 1e-13);
}

TEST(Identification, ZeroGeneratorGivesZeroField) {
  const MonomialBasis basis(2, 1, 2);
  const auto n = static_cast<Eigen::Index>(basis.size());
  EXPECT_EQ(extract_vector_field(Eigen::MatrixXd::Zero(n, n), basis), Eigen::MatrixXd::Zero(n, 2));
  const auto p = evaluate_field_pointwise(Eigen::MatrixXd::Zero(n, n), basis, Eigen::Vector2d(0.3, -2.0),
                                          Eigen::VectorXd::Constant(1, 1.5));
  EXPECT_EQ(p.value, Eigen::Vector2d::Zero());
}

TEST(Identification, FirstOrderLinearRecovery) {
  const VectorField f("first_order", 1, 1, [](const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx) {
    dx[0] = -x[0] + u[0];
  });
  const MonomialBasis basis(1, 1, 2);
  const KoopmanModel model = identify(simulated_snapshots(f, 1500, 0.02, 5), basis);
  // basis order: 1, x, u, x^2, x u, u^2
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(6);
  expected << 0, -1, 1, 0, 0, 0;
  EXPECT_LE((model.field.col(0) - expected).cwiseAbs().maxCoeff(), 1e-4) << model.field.transpose();
}

TEST(Identification, PointwiseDecay) {
  const KoopmanModel model = identify(decay_snapshots(), MonomialBasis(1, 0, 1));
  const auto p = evaluate_field_pointwise(model.generator, model.basis, Eigen::VectorXd::Constant(1, 2.0),
                                          Eigen::VectorXd(0));
  EXPECT_NEAR(p.value[0], -1.3862943611198906, 1e-12);
  EXPECT_FALSE(p.rank_deficient);
  EXPECT_NEAR(model.vector_field(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd(0))[0], p.value[0], 1e-12);
}

TEST(Identification, PointwiseMatchesFieldForLinearSystem) {
  const MonomialBasis basis(2, 1, 2);
  const KoopmanModel model = identify(simulated_snapshots(builtin_field("linear2d"), 2000, 0.01, 21), basis);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd x = testutil::random_matrix(rng, 2, 1);
    const Eigen::VectorXd u = testutil::random_matrix(rng, 1, 1);
    const auto p = evaluate_field_pointwise(model.generator, basis, x, u);
    EXPECT_LE((p.value - model.vector_field(x, u)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Identification, ModelInvariantsHold) {
  const MonomialBasis basis(2, 1, 3);
  const KoopmanModel model = identify(simulated_snapshots(builtin_field("duffing"), 3000, 0.02, 2, 2.0), basis);
  EXPECT_NO_THROW(model.validate());
  EXPECT_LE(model.meta.roundtrip_error, 1e-8);
  EXPECT_EQ(model.meta.snapshots, 2999u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LE((model.field.col(static_cast<Eigen::Index>(i)) - model.generator * basis.identity_coefficients(i))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
  }
  KoopmanModel broken = model;
  broken.field(3, 1) += 1.0;
  EXPECT_KOOPID_ERROR(broken.validate(), ErrorCode::kInvariantViolation);
  broken = model;
  broken.generator(0, 0) += 1e-3;
  EXPECT_KOOPID_ERROR(broken.validate(), ErrorCode::kInvariantViolation);
}

TEST(Identification, RejectsMismatchedSnapshots) {
  SnapshotSet s = decay_snapshots();
  EXPECT_KOOPID_ERROR(fit_koopman(s, MonomialBasis(2, 0, 1)), ErrorCode::kDimensionMismatch);
  s.x.resize(0, 1);
  s.y.resize(0, 1);
  s.u.resize(0, 0);
  EXPECT_KOOPID_ERROR(fit_koopman(s, MonomialBasis(1, 0, 1)), ErrorCode::kEmptySnapshotSet);
}

TEST(ModelFile, RoundTripIsExact) {
  const MonomialBasis basis(2, 1, 2);
  KoopmanModel model = identify(simulated_snapshots(builtin_field("vanderpol"), 800, 0.02, 3, 0.5), basis);
  model.meta.seed = 77;
  const auto path = std::filesystem::temp_directory_path() / "koopid_model_roundtrip.json";
  save_model(model, path);
  const KoopmanModel back = load_model(path);
  EXPECT_EQ(back.basis, model.basis);
  EXPECT_EQ(back.ts, model.ts);
  EXPECT_EQ(back.koopman, model.koopman);
  EXPECT_EQ(back.generator, model.generator);
  EXPECT_EQ(back.field, model.field);
  EXPECT_EQ(back.meta.seed, 77u);
  EXPECT_EQ(back.meta.snapshots, model.meta.snapshots);
  EXPECT_EQ(model_to_json(back), model_to_json(model));
}

TEST(ModelFile, RejectsBadDocuments) {
  EXPECT_KOOPID_ERROR(model_from_json("{not json"), ErrorCode::kParseError);
  EXPECT_KOOPID_ERROR(model_from_json("{\"format_version\": 99}"), ErrorCode::kSchemaError);
  EXPECT_KOOPID_ERROR(load_model("/nonexistent/model.json"), ErrorCode::kParseError);
  const KoopmanModel model = identify(decay_snapshots(), MonomialBasis(1, 0, 1));
  std::string text = model_to_json(model);
  const auto pos = text.find("\"A\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(text.find('[', pos), 1, "[5, ");
  EXPECT_ANY_THROW(model_from_json(text));
}
