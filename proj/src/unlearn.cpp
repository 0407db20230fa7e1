#include "resurgence/unlearn.hpp"

#include <cmath>

#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"

namespace rlab {
namespace {

void require_dim(const LinearScoreModel& model, const Subspace& c) {
  if (model.dim() != c.ambient_dim())
    throw Error(ErrorCode::AmbientMismatch, "model dimension " + std::to_string(model.dim()) +
                                                " != subspace ambient dimension " +
                                                std::to_string(c.ambient_dim()));
}

Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& cols, Eigen::Index d) {
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != d) throw Error(ErrorCode::AmbientMismatch, "direction has wrong dimension");
    m.col(static_cast<Eigen::Index>(j)) = cols[j];
  }
  return m;
}

// Orthonormal basis for the column span of m, tolerant of dependence.
Eigen::MatrixXd span_basis(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > 1e-10 * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace

std::string to_string(UnlearnMethod method) {
  switch (method) {
    case UnlearnMethod::Projection: return "projection";
    case UnlearnMethod::AnchorEdit: return "anchor_edit";
    case UnlearnMethod::Gradient: return "gradient";
  }
  return "projection";
}

UnlearnMethod unlearn_method_from_string(const std::string& name) {
  if (name == "projection") return UnlearnMethod::Projection;
  if (name == "anchor_edit") return UnlearnMethod::AnchorEdit;
  if (name == "gradient") return UnlearnMethod::Gradient;
  throw Error(ErrorCode::BadParam, "unknown unlearn method '" + name + "'");
}

double concept_residual(const LinearScoreModel& model, const Subspace& c) {
  require_dim(model, c);
  // ||U_C U_C^T W||_F = ||U_C^T W||_F
  return (c.basis().transpose() * model.weights()).norm();
}

UnlearnResult project_unlearn(const LinearScoreModel& model, const Subspace& c) {
  require_dim(model, c);
  const auto& u = c.basis();
  Eigen::MatrixXd w = model.weights() - u * (u.transpose() * model.weights());
  LinearScoreModel edited(std::move(w));
  const double residual = concept_residual(edited, c);
  return {std::move(edited), residual, UnlearnMethod::Projection};
}

UnlearnResult anchor_edit(const LinearScoreModel& model,
                          const std::vector<Eigen::VectorXd>& concept_dirs,
                          const std::vector<Eigen::VectorXd>& anchor_dirs, double ridge) {
  if (concept_dirs.size() != anchor_dirs.size())
    throw Error(ErrorCode::BadParam, "concept and anchor lists differ in length");
  if (concept_dirs.empty()) throw Error(ErrorCode::BadParam, "no concept directions given");
  if (!(ridge >= 0.0)) throw Error(ErrorCode::BadParam, "ridge must be >= 0");
  for (const auto& c : concept_dirs)
    if (c.norm() == 0.0) throw Error(ErrorCode::BadParam, "concept direction is zero");

  const Eigen::Index d = model.dim();
  const Eigen::MatrixXd cm = stack(concept_dirs, d);
  const Eigen::MatrixXd am = stack(anchor_dirs, d);
  const auto& w = model.weights();
  const Eigen::Index m = cm.cols();

  Eigen::MatrixXd gram = cm.transpose() * cm;
  if (ridge == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(m - 1);
    if (lo <= 1e-12 * hi)
      throw Error(ErrorCode::SingularEdit,
                  "concept directions are linearly dependent and ridge = 0");
  }
  gram.diagonal().array() += ridge;

  // Solve (C^T C + ridge I) Y = C^T for Y, then W' = W + (W A - W C) Y.
  const Eigen::MatrixXd y = gram.ldlt().solve(cm.transpose());
  Eigen::MatrixXd edited = w + (w * am - w * cm) * y;
  LinearScoreModel out(std::move(edited));

  const Eigen::MatrixXd u = span_basis(cm);
  const double residual = (u.transpose() * out.weights()).norm();
  return {std::move(out), residual, UnlearnMethod::AnchorEdit};
}

double suppression_objective(const LinearScoreModel& model, const Subspace& c,
                             const DataDistribution& dist, double alpha) {
  require_dim(model, c);
  const Eigen::MatrixXd uw = c.basis().transpose() * model.weights();
  return (uw * sigma_t(dist, alpha)).cwiseProduct(uw).sum();
}

UnlearnResult gradient_unlearn(const LinearScoreModel& model, const Subspace& c,
                               const DataDistribution& dist, double alpha,
                               const GradientUnlearnOptions& options) {
  require_dim(model, c);
  require_alpha(alpha);
  if (options.steps < 1) throw Error(ErrorCode::BadParam, "steps must be >= 1");
  const Eigen::MatrixXd st = sigma_t(dist, alpha);
  double lr = options.learning_rate;
  if (lr <= 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    lr = top > 0.0 ? 0.1 / top : 0.1;
  }

  const Eigen::MatrixXd& u = c.basis();
  Eigen::MatrixXd w = model.weights();
  auto objective = [&](const Eigen::MatrixXd& wm) {
    const Eigen::MatrixXd uw = u.transpose() * wm;
    return (uw * st).cwiseProduct(uw).sum();
  };

  double prev = objective(w);
  // Rises below this level are round-off jitter around the minimum; the part
  // of U^T W in the null space of Sigma_t never moves, so it sets the scale.
  const double floor = 1e-13 * (u.transpose() * w).squaredNorm() * st.trace();
  int rises = 0;
  for (int k = 0; k < options.steps; ++k) {
    Eigen::MatrixXd moment = st;
    if (options.num_samples > 0)
      moment = mc_second_moment(dist, alpha, options.num_samples,
                                derive_seed(options.seed, static_cast<std::uint64_t>(k)));
    const Eigen::MatrixXd uw = u.transpose() * w;
    w.noalias() -= lr * 2.0 * u * (uw * moment);
    const double cur = objective(w);
    if (!std::isfinite(cur))
      throw Error(ErrorCode::Diverged, "suppression objective non-finite at step " + std::to_string(k + 1), k + 1);
    rises = (cur > prev && cur > floor) ? rises + 1 : 0;
    if (rises >= 3)
      throw Error(ErrorCode::Diverged,
                  "suppression objective rose 3 steps in a row at step " + std::to_string(k + 1),
                  k + 1);
    prev = cur;
  }
  LinearScoreModel out(std::move(w));
  const double residual = concept_residual(out, c);
  return {std::move(out), residual, UnlearnMethod::Gradient};
}

UnlearnCheck verify_unlearned(const LinearScoreModel& model, const Subspace& c, double tol) {
  const double r = concept_residual(model, c);
  return {r <= tol, r};
}

}  // namespace rlab
