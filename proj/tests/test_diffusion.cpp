#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "resurgence/diffusion.hpp"
#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"
#include "resurgence/subspace.hpp"

using namespace rlab;

namespace {

DataDistribution random_distribution(int d, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd g = rng.gaussian(d, d);
  Eigen::MatrixXd cov = g * g.transpose() / d;
  cov = 0.5 * (cov + cov.transpose());
  return DataDistribution(cov);
}

LinearScoreModel random_model(int d, std::uint64_t seed) {
  Rng rng(seed);
  return LinearScoreModel(rng.gaussian(d, d) / std::sqrt(static_cast<double>(d)));
}

}  // namespace

TEST(Corrupt, Examples) {
  Eigen::VectorXd x0(3), eps(3);
  x0 << 1, 2, 3;
  eps << -1, 0.5, 4;
  EXPECT_EQ(corrupt(x0, eps, 1.0), x0);
  EXPECT_LE((corrupt(Eigen::VectorXd::Zero(3), eps, 0.75) - 0.5 * eps).norm(), 1e-15);

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4), e2 = Eigen::VectorXd::Zero(4);
  e1(0) = 1;
  e2(1) = 1;
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
  expected << 0.8, 0.6, 0, 0;
  EXPECT_LE((corrupt(e1, e2, 0.64) - expected).norm(), 1e-15);
}

TEST(Corrupt, BadAlpha) {
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(2);
  for (double a : {0.0, -0.1, 1.0000001, std::nan("")}) {
    try {
      corrupt(v, v, a);
      FAIL() << "alpha " << a;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadAlpha);
    }
  }
}

TEST(SigmaT, Examples) {
  const auto id = DataDistribution::identity(3);
  for (double a : {0.01, 0.3, 1.0}) EXPECT_LE((sigma_t(id, a) - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-15);

  const auto dist = random_distribution(5, 1);
  EXPECT_EQ(sigma_t(dist, 1.0), dist.covariance());

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov(0, 0) = 4;
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  expected(0, 0) = 2.5;
  expected(1, 1) = 0.5;
  EXPECT_LE((sigma_t(DataDistribution(cov), 0.5) - expected).norm(), 1e-15);
}

TEST(SigmaT, InterpolatesTowardIdentity) {
  const auto dist = random_distribution(6, 2);
  EXPECT_LE((sigma_t(dist, 1e-12) - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((sigma_t(dist, 1.0) - dist.covariance()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DataDistributionType, Validation) {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(DataDistribution{asym}, Error);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(2, 2);
  neg(1, 1) = -1e-3;
  EXPECT_THROW(DataDistribution{neg}, Error);
  Eigen::MatrixXd tiny = Eigen::MatrixXd::Identity(2, 2);
  tiny(1, 1) = -1e-11;  // clamped
  const DataDistribution ok(tiny);
  EXPECT_LE((ok.factor() * ok.factor().transpose() - Eigen::Matrix2d(Eigen::Vector2d(1, 0).asDiagonal())).norm(), 1e-12);
}

TEST(ExpectedLoss, Examples) {
  const int d = 5;
  const auto dist = random_distribution(d, 3);
  EXPECT_NEAR(expected_loss(LinearScoreModel::zero(d), dist, 0.4), d, 1e-12);
  EXPECT_NEAR(expected_loss(LinearScoreModel(Eigen::MatrixXd::Identity(d, d)), DataDistribution::identity(d), 1.0),
              2.0 * d, 1e-12);
}

TEST(ExpectedLoss, MatchesTermByTermExpansion) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int d = 6;
    const auto dist = random_distribution(d, seed);
    const auto model = random_model(d, seed + 50);
    const double alpha = 0.05 + 0.9 * (static_cast<double>(seed) / 20.0);
    const double oracle = oracle::loss_by_expansion(model.weights(), sigma_t(dist, alpha), std::sqrt(1 - alpha));
    EXPECT_NEAR(expected_loss(model, dist, alpha), oracle, 1e-12 * std::max(1.0, std::abs(oracle)));
  }
}

TEST(ExpectedLoss, MonteCarloWithinThreeStandardErrors) {
  const int d = 6;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto dist = random_distribution(d, 10 + seed);
    const auto model = random_model(d, 20 + seed);
    const double alpha = 0.3 + 0.2 * static_cast<double>(seed);
    const auto mc = mc_loss(model, dist, alpha, 1000000, 30 + seed);
    EXPECT_LE(std::abs(mc.mean - expected_loss(model, dist, alpha)), 3.0 * mc.std_error);
  }
}

TEST(ExpectedLoss, ExactParabolaAlongLines) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int d = 8;
    const auto dist = random_distribution(d, seed);
    const auto model = random_model(d, seed + 1);
    Rng rng(seed + 2);
    const Eigen::MatrixXd g = rng.gaussian(d, d);
    const double alpha = 0.6;
    auto loss_at = [&](double s) { return expected_loss(LinearScoreModel(model.weights() + s * g), dist, alpha); };
    // Fit a parabola through s = -1, 0, 1 and check it predicts s = 2 and s = -0.5.
    const double lm = loss_at(-1), l0 = loss_at(0), lp = loss_at(1);
    const double a = 0.5 * (lp + lm) - l0, b = 0.5 * (lp - lm);
    for (double s : {2.0, -0.5, 0.25}) {
      const double predicted = a * s * s + b * s + l0;
      EXPECT_NEAR(loss_at(s), predicted, 1e-10 * std::max(1.0, std::abs(predicted)));
    }
  }
}

TEST(AnalyticGradient, Examples) {
  const int d = 4;
  const auto dist = random_distribution(d, 5);
  EXPECT_LE((analytic_gradient(LinearScoreModel::zero(d), dist, 0.75) + Eigen::MatrixXd::Identity(d, d)).norm(), 1e-15);
  const auto model = random_model(d, 6);
  EXPECT_LE((analytic_gradient(model, DataDistribution::identity(d), 1.0) - 2.0 * model.weights()).norm(), 1e-15);
}

TEST(AnalyticGradient, MatchesFiniteDifferences) {
  const int d = 8;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto dist = random_distribution(d, 100 + seed);
    const auto model = random_model(d, 200 + seed);
    const double alpha = 0.02 + 0.98 * (static_cast<double>(seed) / 29.0);
    const auto loss = [&](const Eigen::MatrixXd& w) { return expected_loss(LinearScoreModel(w), dist, alpha); };
    const Eigen::MatrixXd fd = oracle::fd_gradient(loss, model.weights());
    const Eigen::MatrixXd g = analytic_gradient(model, dist, alpha);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double scale = std::max({1.0, std::abs(g(i)), std::abs(fd(i))});
      EXPECT_LE(std::abs(g(i) - fd(i)) / scale, 1e-6);
    }
  }
}

TEST(ResidualCorrelation, Examples) {
  const int d = 6;
  const Subspace c = Subspace::random(d, 2, 3);
  const auto dist = random_distribution(d, 4);
  Rng rng(5);
  const Eigen::MatrixXd w = (Eigen::MatrixXd::Identity(d, d) - c.projector()) * rng.gaussian(d, d);
  const double alpha = 0.36;
  const Eigen::MatrixXd a = residual_correlation(LinearScoreModel(w), dist, alpha);
  EXPECT_LE((c.projector() * a + std::sqrt(1 - alpha) * c.projector()).norm(), 1e-12);
  EXPECT_LE((2.0 * a - analytic_gradient(LinearScoreModel(w), dist, alpha)).norm(), 0.0);

  const LinearScoreModel id(Eigen::MatrixXd::Identity(d, d));
  EXPECT_LE((residual_correlation(id, DataDistribution::identity(d), 1.0) - Eigen::MatrixXd::Identity(d, d)).norm(), 1e-15);
  const Eigen::VectorXd v = rng.unit_vector(d);
  EXPECT_NEAR(std::abs(v.dot(residual_correlation(id, DataDistribution::identity(d), 0.75) * v)), 0.5, 1e-14);
}

TEST(McGradient, AgreesWithAnalytic) {
  const int d = 8;
  const auto dist = random_distribution(d, 7);
  const auto model = random_model(d, 8);
  const double alpha = 0.6;
  const auto mc = mc_gradient(model, dist, alpha, 100000, 9);
  const Eigen::MatrixXd g = analytic_gradient(model, dist, alpha);
  int within = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) within += std::abs(mc.mean(i) - g(i)) <= 4.0 * mc.std_error(i);
  EXPECT_GE(within, static_cast<int>(std::ceil(0.99 * g.size())));
  EXPECT_NEAR(mc.max_std_error, mc.std_error.maxCoeff(), 0.0);
}

TEST(McGradient, SeedReplaysBitIdentically) {
  const auto dist = random_distribution(5, 1);
  const auto model = random_model(5, 2);
  const auto a = mc_gradient(model, dist, 0.5, 10000, 77);
  const auto b = mc_gradient(model, dist, 0.5, 10000, 77);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_NE(a.mean, mc_gradient(model, dist, 0.5, 10000, 78).mean);
}

TEST(McGradient, NoiselessEndpointConvergesToTwoWSigma) {
  const int d = 5;
  const auto dist = random_distribution(d, 11);
  const auto model = random_model(d, 12);
  const auto mc = mc_gradient(model, dist, 1.0, 200000, 13);
  const Eigen::MatrixXd target = 2.0 * model.weights() * dist.covariance();
  EXPECT_LE((mc.mean - target).cwiseAbs().maxCoeff(), 6.0 * mc.max_std_error);
}

TEST(CurvatureTerm, Examples) {
  const int d = 6;
  const auto dist = random_distribution(d, 4);
  EXPECT_EQ(curvature_term(Eigen::MatrixXd::Zero(d, d), dist, 0.3), 0.0);
  const Subspace c = Subspace::random(d, 4, 2);
  EXPECT_NEAR(curvature_term(c.projector(), DataDistribution::identity(d), 0.4), 8.0, 1e-12);
}

TEST(CurvatureTerm, MatchesSecondDirectionalDifference) {
  const int d = 7;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto dist = random_distribution(d, seed);
    const auto model = random_model(d, seed + 30);
    Rng rng(seed + 60);
    const Eigen::MatrixXd g = rng.gaussian(d, d);
    const double alpha = 0.1 + 0.04 * static_cast<double>(seed);
    const auto loss = [&](const Eigen::MatrixXd& w) { return expected_loss(LinearScoreModel(w), dist, alpha); };
    const double fd = oracle::fd_second_directional(loss, model.weights(), g);
    const double c = curvature_term(g, dist, alpha);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(std::abs(fd - c), 1e-5 * c);
  }
}

TEST(SampleX0, Examples) {
  const auto zero = sample_x0(DataDistribution(Eigen::MatrixXd::Zero(3, 3)), 10, 1);
  EXPECT_EQ(zero, Eigen::MatrixXd::Zero(10, 3));

  const auto x = sample_x0(DataDistribution::identity(4), 100000, 2);
  const Eigen::MatrixXd cov = x.transpose() * x / 100000.0;
  EXPECT_LE((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.05);

  EXPECT_EQ(sample_x0(DataDistribution::identity(4), 5000, 3), sample_x0(DataDistribution::identity(4), 5000, 3));
}

TEST(SampleX0, FromFactorCovariance) {
  Rng rng(4);
  const Eigen::MatrixXd f = rng.gaussian(3, 2);
  const auto dist = DataDistribution::from_factor(f);
  const auto x = sample_x0(dist, 200000, 5);
  const Eigen::MatrixXd cov = x.transpose() * x / 200000.0;
  EXPECT_LE((cov - dist.covariance()).cwiseAbs().maxCoeff(), 0.05 * std::max(1.0, dist.lambda_max()));
}

TEST(NoiseScheduleType, Kinds) {
  const auto lin = NoiseSchedule::linear(10);
  ASSERT_EQ(lin.num_steps(), 10);
  EXPECT_DOUBLE_EQ(lin.alphas().front(), 0.9999);
  EXPECT_DOUBLE_EQ(lin.alphas().back(), 0.02);
  const auto cos = NoiseSchedule::cosine(20);
  for (std::size_t t = 0; t < 20; ++t) {
    EXPECT_GT(cos.alphas()[t], 0.0);
    EXPECT_LE(cos.alphas()[t], 1.0);
    if (t > 0) {
      EXPECT_LE(cos.alphas()[t], cos.alphas()[t - 1]);
    }
  }
  EXPECT_EQ(NoiseSchedule::single(0.3).alphas(), std::vector<double>{0.3});
  EXPECT_THROW(NoiseSchedule::single(0.0), Error);
  EXPECT_THROW(NoiseSchedule::from_alphas(ScheduleKind::Linear, {0.5, 0.6}), Error);
}
