#include <cmath>

#include <gtest/gtest.h>

#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"
#include "resurgence/unlearn.hpp"

using namespace rlab;

namespace {

DataDistribution random_distribution(int d, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd g = rng.gaussian(d, d + 2);
  return DataDistribution::from_factor(g / std::sqrt(static_cast<double>(d)));
}

Eigen::VectorXd basis_vector(int d, int i) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  v(i) = 1.0;
  return v;
}

}  // namespace

TEST(ProjectUnlearn, Examples) {
  const auto r = project_unlearn(LinearScoreModel(Eigen::MatrixXd::Identity(2, 2)), Subspace::coordinate(2, {0}));
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  expected(1, 1) = 1.0;
  EXPECT_LE((r.model.weights() - expected).norm(), 1e-15);
  EXPECT_EQ(r.method, UnlearnMethod::Projection);

  Rng rng(1);
  const LinearScoreModel w(rng.gaussian(5, 5));
  EXPECT_LE(project_unlearn(w, Subspace::random(5, 5, 2)).model.weights().norm(), 1e-12);
}

TEST(ProjectUnlearn, RandomInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const LinearScoreModel w(rng.gaussian(32, 32));
    const Subspace c = Subspace::random(32, 4, seed + 100);
    const auto r = project_unlearn(w, c);
    const Eigen::MatrixXd pc = c.projector();
    const Eigen::MatrixXd keep = Eigen::MatrixXd::Identity(32, 32) - pc;
    EXPECT_LE((pc * r.model.weights()).norm(), 1e-12);
    EXPECT_LE(r.residual_norm, 1e-12);
    EXPECT_LE((keep * (r.model.weights() - w.weights())).norm(), 1e-12);
    EXPECT_NEAR(r.residual_norm, concept_residual(r.model, c), 1e-12);
    // Idempotent.
    EXPECT_LE((project_unlearn(r.model, c).model.weights() - r.model.weights()).norm(), 1e-12);
  }
}

TEST(ProjectUnlearn, AmbientMismatch) {
  try {
    project_unlearn(LinearScoreModel::zero(3), Subspace::coordinate(4, {0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AmbientMismatch);
  }
}

TEST(AnchorEdit, IdentityEditWhenAnchorsEqualConcepts) {
  Rng rng(3);
  const LinearScoreModel w(rng.gaussian(6, 6));
  std::vector<Eigen::VectorXd> cs{rng.gaussian_vector(6), rng.gaussian_vector(6)};
  const auto r = anchor_edit(w, cs, cs, 0.0);
  EXPECT_LE((r.model.weights() - w.weights()).norm(), 1e-12);
  EXPECT_EQ(r.method, UnlearnMethod::AnchorEdit);
}

TEST(AnchorEdit, SingleConstraintHandOracle) {
  // Least-norm update with W' e1 = W e2 for W = I: only the first column moves.
  const auto r = anchor_edit(LinearScoreModel(Eigen::MatrixXd::Identity(2, 2)), {basis_vector(2, 0)},
                             {basis_vector(2, 1)}, 0.0);
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 0, 1, 1;
  EXPECT_LE((r.model.weights() - expected).norm(), 1e-15);
}

TEST(AnchorEdit, RidgeLimitApproachesOriginal) {
  Rng rng(4);
  const LinearScoreModel w(rng.gaussian(5, 5));
  std::vector<Eigen::VectorXd> cs{rng.gaussian_vector(5)}, as{rng.gaussian_vector(5)};
  const double d3 = (anchor_edit(w, cs, as, 1e3).model.weights() - w.weights()).norm();
  const double d6 = (anchor_edit(w, cs, as, 1e6).model.weights() - w.weights()).norm();
  const double d0 = (anchor_edit(w, cs, as, 0.0).model.weights() - w.weights()).norm();
  EXPECT_LT(d6, d3);
  EXPECT_LT(d3, d0);
  EXPECT_LE(d6, 1e-4 * d0);
}

TEST(AnchorEdit, InterpolationAndUntouchedComplement) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const int d = 12, m = 4;
    const LinearScoreModel w(rng.gaussian(d, d));
    std::vector<Eigen::VectorXd> cs, as;
    for (int i = 0; i < m; ++i) {
      cs.push_back(rng.gaussian_vector(d));
      as.push_back(rng.gaussian_vector(d));
    }
    const auto r = anchor_edit(w, cs, as, 0.0);
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd target = w.weights() * as[static_cast<std::size_t>(i)];
      EXPECT_LE((r.model.weights() * cs[static_cast<std::size_t>(i)] - target).norm(), 1e-9 * target.norm());
    }
    Eigen::MatrixXd cm(d, m);
    for (int i = 0; i < m; ++i) cm.col(i) = cs[static_cast<std::size_t>(i)];
    const Subspace span = Subspace::orthonormalize(cm);
    const Eigen::VectorXd x = (Eigen::MatrixXd::Identity(d, d) - span.projector()) * rng.gaussian_vector(d);
    EXPECT_LE(((r.model.weights() - w.weights()) * x).norm(), 1e-10 * std::max(1.0, x.norm()));
  }
}

TEST(AnchorEdit, Errors) {
  const LinearScoreModel w(Eigen::MatrixXd::Identity(3, 3));
  const Eigen::VectorXd e1 = basis_vector(3, 0);
  try {
    anchor_edit(w, {e1, 2.0 * e1}, {e1, e1}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularEdit);
  }
  EXPECT_NO_THROW(anchor_edit(w, {e1, 2.0 * e1}, {e1, e1}, 1e-3));
  EXPECT_THROW(anchor_edit(w, {e1}, {}, 0.0), Error);
  EXPECT_THROW(anchor_edit(w, {Eigen::VectorXd::Zero(3)}, {e1}, 0.0), Error);
}

TEST(GradientUnlearn, FixedPointWhenAlreadyUnlearned) {
  Rng rng(5);
  const Subspace c = Subspace::random(8, 2, 6);
  const auto start = project_unlearn(LinearScoreModel(rng.gaussian(8, 8)), c).model;
  const auto r = gradient_unlearn(start, c, random_distribution(8, 7), 0.5, {20, 0.0, 0, 0});
  EXPECT_LE((r.model.weights() - start.weights()).norm(), 1e-12);
}

TEST(GradientUnlearn, ScalarRecursionWithIdentityCovariance) {
  Rng rng(8);
  const int d = 6;
  const Subspace c = Subspace::random(d, 2, 9);
  const LinearScoreModel w(rng.gaussian(d, d));
  const double lr = 0.1;
  const int steps = 7;
  const auto r = gradient_unlearn(w, c, DataDistribution::identity(d), 1.0, {steps, lr, 0, 0});
  const Eigen::MatrixXd pc = c.projector();
  const Eigen::MatrixXd expected = std::pow(1.0 - 2.0 * lr, steps) * pc * w.weights();
  EXPECT_LE((pc * r.model.weights() - expected).norm(), 1e-12);
  // Rows outside C are untouched.
  const Eigen::MatrixXd keep = Eigen::MatrixXd::Identity(d, d) - pc;
  EXPECT_LE((keep * (r.model.weights() - w.weights())).norm(), 1e-12);
}

TEST(GradientUnlearn, GeometricConvergence) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const int d = 10;
    const Subspace c = Subspace::random(d, 3, seed + 20);
    const LinearScoreModel w(rng.gaussian(d, d));
    Eigen::MatrixXd g = rng.gaussian(d, d);
    const DataDistribution dist(g * g.transpose() / d + 0.5 * Eigen::MatrixXd::Identity(d, d));
    const double alpha = 0.8;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_t(dist, alpha));
    const double lr = 0.1 / eig.eigenvalues().maxCoeff();
    const auto r = gradient_unlearn(w, c, dist, alpha, {500, lr, 0, 0});
    EXPECT_LE(r.residual_norm, 1e-6 * concept_residual(w, c));
    EXPECT_TRUE(verify_unlearned(r.model, c, 1e-5).unlearned);
  }
}

TEST(GradientUnlearn, ObjectiveMonotoneUnderStableStep) {
  Rng rng(30);
  const int d = 8;
  const Subspace c = Subspace::random(d, 3, 31);
  const auto dist = random_distribution(d, 32);
  const double alpha = 0.9;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_t(dist, alpha));
  const double lr = 1.0 / eig.eigenvalues().maxCoeff();
  LinearScoreModel w(rng.gaussian(d, d));
  double prev = suppression_objective(w, c, dist, alpha);
  for (int k = 0; k < 50; ++k) {
    w = gradient_unlearn(w, c, dist, alpha, {1, lr, 0, 0}).model;
    const double cur = suppression_objective(w, c, dist, alpha);
    EXPECT_LE(cur, prev * (1.0 + 1e-12) + 1e-15);
    prev = cur;
  }
}

TEST(GradientUnlearn, DivergenceDetected) {
  Rng rng(40);
  const int d = 5;
  const Subspace c = Subspace::random(d, 2, 41);
  try {
    gradient_unlearn(LinearScoreModel(rng.gaussian(d, d)), c, DataDistribution::identity(d), 1.0, {50, 5.0, 0, 0});
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Diverged);
    EXPECT_EQ(e.index(), 3);
  }
}

TEST(GradientUnlearn, StochasticModeTracksExact) {
  Rng rng(50);
  const int d = 6;
  const Subspace c = Subspace::random(d, 2, 51);
  const LinearScoreModel w(rng.gaussian(d, d));
  const auto dist = random_distribution(d, 52);
  const auto exact = gradient_unlearn(w, c, dist, 0.7, {200, 0.0, 0, 0});
  const auto noisy = gradient_unlearn(w, c, dist, 0.7, {200, 0.0, 20000, 53});
  EXPECT_LE(noisy.residual_norm, 0.05 * concept_residual(w, c));
  EXPECT_LE(exact.residual_norm, 0.05 * concept_residual(w, c));
}

TEST(VerifyUnlearned, Examples) {
  const Subspace c = Subspace::random(6, 3, 1);
  Rng rng(2);
  const auto r = project_unlearn(LinearScoreModel(rng.gaussian(6, 6)), c);
  EXPECT_TRUE(verify_unlearned(r.model, c, 1e-10).unlearned);

  const auto check = verify_unlearned(LinearScoreModel(Eigen::MatrixXd::Identity(6, 6)), c, 1e-10);
  EXPECT_FALSE(check.unlearned);
  EXPECT_NEAR(check.residual_norm, std::sqrt(3.0), 1e-12);
}
