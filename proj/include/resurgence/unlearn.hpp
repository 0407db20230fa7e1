#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resurgence/diffusion.hpp"
#include "resurgence/subspace.hpp"

namespace rlab {

enum class UnlearnMethod { Projection, AnchorEdit, Gradient };

std::string to_string(UnlearnMethod method);
UnlearnMethod unlearn_method_from_string(const std::string& name);

struct UnlearnResult {
  LinearScoreModel model;
  double residual_norm = 0.0;  // ||P_C W'||_F
  UnlearnMethod method = UnlearnMethod::Projection;
};

// ||P_C W||_F.
double concept_residual(const LinearScoreModel& model, const Subspace& c);

// W' = (I - P_C) W. Removes every output component in C.
UnlearnResult project_unlearn(const LinearScoreModel& model, const Subspace& c);

inline constexpr double kDefaultAnchorRidge = 1e-8;

// Closed-form edit mapping each concept direction c_i onto the model's
// response to its anchor a_i:
//   W' = W + (W A - W C)(C^T C + ridge I)^{-1} C^T.
// With ridge = 0 and independent c_i, W' c_i = W a_i exactly; inputs
// orthogonal to span{c_i} are untouched. residual_norm is measured against
// span{c_i}.
UnlearnResult anchor_edit(const LinearScoreModel& model,
                          const std::vector<Eigen::VectorXd>& concept_dirs,
                          const std::vector<Eigen::VectorXd>& anchor_dirs,
                          double ridge = kDefaultAnchorRidge);

struct GradientUnlearnOptions {
  int steps = 500;
  double learning_rate = 0.0;  // <= 0 selects 0.1 / lambda_max(Sigma_t)
  int num_samples = 0;         // 0: exact objective; otherwise stochastic estimate
  std::uint64_t seed = 0;
};

// Gradient descent on the suppression objective E||P_C W x_t||^2 =
// tr(P_C W Sigma_t W^T P_C), gradient 2 P_C W Sigma_t. Throws Diverged if the
// objective rises three steps in a row.
UnlearnResult gradient_unlearn(const LinearScoreModel& model, const Subspace& c,
                               const DataDistribution& dist, double alpha,
                               const GradientUnlearnOptions& options);

// Exact suppression objective.
double suppression_objective(const LinearScoreModel& model, const Subspace& c,
                             const DataDistribution& dist, double alpha);

struct UnlearnCheck {
  bool unlearned = false;
  double residual_norm = 0.0;
};

UnlearnCheck verify_unlearned(const LinearScoreModel& model, const Subspace& c, double tol);

}  // namespace rlab
