#include "resurgence/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"

namespace rlab {
namespace {

constexpr int kBlock = 4096;
constexpr double kAlphaStart = 0.9999;
constexpr double kAlphaEnd = 0.02;

void require_dims(int model_dim, int dist_dim) {
  if (model_dim != dist_dim)
    throw Error(ErrorCode::AmbientMismatch, "model dimension " + std::to_string(model_dim) +
                                                " != distribution dimension " +
                                                std::to_string(dist_dim));
}

// One block of forward-process draws: rows of x_t and the matching eps.
struct Block {
  Eigen::MatrixXd xt;
  Eigen::MatrixXd eps;
};

Block draw_block(const DataDistribution& dist, double alpha, int n, std::uint64_t seed) {
  Rng rng(seed);
  const int d = dist.dim();
  Eigen::MatrixXd z = rng.gaussian(n, dist.factor().cols());
  Eigen::MatrixXd eps = rng.gaussian(n, d);
  Block b;
  b.xt = std::sqrt(alpha) * (z * dist.factor().transpose()) + std::sqrt(1.0 - alpha) * eps;
  b.eps = std::move(eps);
  return b;
}

// Calls fn(block_index, block_size) over ceil(n / kBlock) blocks.
template <typename Fn>
void for_each_block(int num_samples, Fn&& fn) {
  const int blocks = (num_samples + kBlock - 1) / kBlock;
  for (int b = 0; b < blocks; ++b) {
    const int size = std::min(kBlock, num_samples - b * kBlock);
    fn(b, size);
  }
}

McEstimate finish_scalar(double sum, double sumsq, int n) {
  McEstimate e;
  e.mean = sum / n;
  const double var = std::max(0.0, (sumsq - n * e.mean * e.mean) / (n - 1));
  e.std_error = std::sqrt(var / n);
  return e;
}

}  // namespace

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::SingleAlpha: return "single-alpha";
  }
  return "linear";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "linear") return ScheduleKind::Linear;
  if (name == "cosine") return ScheduleKind::Cosine;
  if (name == "single-alpha" || name == "single_alpha") return ScheduleKind::SingleAlpha;
  throw Error(ErrorCode::BadParam, "unknown schedule kind '" + name + "'");
}

NoiseSchedule NoiseSchedule::linear(int num_steps) {
  if (num_steps < 1) throw Error(ErrorCode::BadParam, "num_steps must be >= 1");
  std::vector<double> alphas(static_cast<std::size_t>(num_steps));
  for (int t = 0; t < num_steps; ++t) {
    const double frac = num_steps == 1 ? 0.0 : static_cast<double>(t) / (num_steps - 1);
    alphas[static_cast<std::size_t>(t)] = (1.0 - frac) * kAlphaStart + frac * kAlphaEnd;
  }
  return NoiseSchedule(ScheduleKind::Linear, std::move(alphas));
}

NoiseSchedule NoiseSchedule::cosine(int num_steps) {
  if (num_steps < 1) throw Error(ErrorCode::BadParam, "num_steps must be >= 1");
  constexpr double s = 0.008;
  auto f = [&](double u) {
    const double c = std::cos((u + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> alphas(static_cast<std::size_t>(num_steps));
  for (int t = 1; t <= num_steps; ++t) {
    const double a = f(static_cast<double>(t) / num_steps) / f(0.0);
    alphas[static_cast<std::size_t>(t - 1)] = std::clamp(a, kAlphaEnd, 1.0);
  }
  return NoiseSchedule(ScheduleKind::Cosine, std::move(alphas));
}

NoiseSchedule NoiseSchedule::single(double alpha) {
  require_alpha(alpha);
  return NoiseSchedule(ScheduleKind::SingleAlpha, {alpha});
}

NoiseSchedule NoiseSchedule::from_alphas(ScheduleKind kind, std::vector<double> alphas) {
  if (alphas.empty()) throw Error(ErrorCode::BadParam, "schedule needs at least one alpha");
  for (double a : alphas) require_alpha(a);
  if (kind != ScheduleKind::SingleAlpha) {
    for (std::size_t t = 1; t < alphas.size(); ++t)
      if (alphas[t] > alphas[t - 1])
        throw Error(ErrorCode::BadParam, "schedule alphas must be nonincreasing");
  } else if (alphas.size() != 1) {
    throw Error(ErrorCode::BadParam, "single-alpha schedule holds exactly one alpha");
  }
  return NoiseSchedule(kind, std::move(alphas));
}

double NoiseSchedule::min_alpha() const {
  return *std::min_element(alphas_.begin(), alphas_.end());
}

LinearScoreModel::LinearScoreModel(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols() || weights_.rows() < 1)
    throw Error(ErrorCode::BadParam, "weights must be a nonempty square matrix");
  if (!weights_.allFinite()) throw Error(ErrorCode::BadParam, "weights must be finite");
}

DataDistribution::DataDistribution(Eigen::MatrixXd covariance) : covariance_(std::move(covariance)) {
  if (covariance_.rows() != covariance_.cols() || covariance_.rows() < 1)
    throw Error(ErrorCode::BadParam, "covariance must be a nonempty square matrix");
  if (!covariance_.allFinite()) throw Error(ErrorCode::BadParam, "covariance must be finite");
  const double asym = (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) throw Error(ErrorCode::BadParam, "covariance is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_);
  Eigen::VectorXd vals = eig.eigenvalues();
  if (vals(0) < -1e-10)
    throw Error(ErrorCode::BadParam,
                "covariance has negative eigenvalue " + std::to_string(vals(0)));
  factor_ = eig.eigenvectors() * vals.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
            eig.eigenvectors().transpose();
}

DataDistribution DataDistribution::from_factor(const Eigen::MatrixXd& factor) {
  if (factor.rows() < 1 || !factor.allFinite())
    throw Error(ErrorCode::BadParam, "factor must be a nonempty finite matrix");
  DataDistribution dist;
  Eigen::MatrixXd cov = factor * factor.transpose();
  dist.covariance_ = 0.5 * (cov + cov.transpose());
  dist.factor_ = factor;
  return dist;
}

double DataDistribution::lambda_max() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

Eigen::VectorXd corrupt(const Eigen::VectorXd& x0, const Eigen::VectorXd& eps, double alpha) {
  require_alpha(alpha);
  if (x0.size() != eps.size()) throw Error(ErrorCode::AmbientMismatch, "x0 and eps sizes differ");
  return std::sqrt(alpha) * x0 + std::sqrt(1.0 - alpha) * eps;
}

Eigen::MatrixXd sigma_t(const DataDistribution& dist, double alpha) {
  require_alpha(alpha);
  const int d = dist.dim();
  return alpha * dist.covariance() + (1.0 - alpha) * Eigen::MatrixXd::Identity(d, d);
}

double expected_loss(const LinearScoreModel& model, const DataDistribution& dist, double alpha) {
  require_alpha(alpha);
  require_dims(model.dim(), dist.dim());
  const auto& w = model.weights();
  const Eigen::MatrixXd ws = w * sigma_t(dist, alpha);
  // tr(W Sigma_t W^T) = sum_ij (W Sigma_t)_ij W_ij
  const double quad = ws.cwiseProduct(w).sum();
  return quad - 2.0 * std::sqrt(1.0 - alpha) * w.trace() + model.dim();
}

Eigen::MatrixXd residual_correlation(const LinearScoreModel& model, const DataDistribution& dist,
                                     double alpha) {
  require_alpha(alpha);
  require_dims(model.dim(), dist.dim());
  Eigen::MatrixXd a = model.weights() * sigma_t(dist, alpha);
  a.diagonal().array() -= std::sqrt(1.0 - alpha);
  return a;
}

Eigen::MatrixXd analytic_gradient(const LinearScoreModel& model, const DataDistribution& dist,
                                  double alpha) {
  return 2.0 * residual_correlation(model, dist, alpha);
}

double curvature_term(const Eigen::MatrixXd& direction, const DataDistribution& dist, double alpha) {
  require_alpha(alpha);
  if (direction.rows() != dist.dim() || direction.cols() != dist.dim())
    throw Error(ErrorCode::AmbientMismatch, "direction must be d x d");
  const Eigen::MatrixXd gs = direction * sigma_t(dist, alpha);
  return std::max(0.0, 2.0 * gs.cwiseProduct(direction).sum());
}

Eigen::MatrixXd sample_x0(const DataDistribution& dist, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::BadParam, "n must be >= 1");
  const int d = dist.dim();
  Eigen::MatrixXd out(n, d);
  for_each_block(n, [&](int b, int size) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    out.middleRows(static_cast<Eigen::Index>(b) * kBlock, size) =
        rng.gaussian(size, dist.factor().cols()) * dist.factor().transpose();
  });
  return out;
}

McGradient mc_gradient(const LinearScoreModel& model, const DataDistribution& dist, double alpha,
                       int num_samples, std::uint64_t seed) {
  require_alpha(alpha);
  require_dims(model.dim(), dist.dim());
  if (num_samples < 2) throw Error(ErrorCode::BadParam, "num_samples must be >= 2");
  const int d = dist.dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(d, d);
  const Eigen::MatrixXd wt = model.weights().transpose();
  for_each_block(num_samples, [&](int b, int size) {
    Block blk = draw_block(dist, alpha, size, derive_seed(seed, static_cast<std::uint64_t>(b)));
    const Eigen::MatrixXd r = blk.xt * wt - blk.eps;  // rows: residuals
    sum.noalias() += 2.0 * r.transpose() * blk.xt;
    sumsq.noalias() += 4.0 * r.cwiseAbs2().transpose() * blk.xt.cwiseAbs2();
  });
  const double n = num_samples;
  McGradient g;
  g.mean = sum / n;
  Eigen::MatrixXd var = ((sumsq - n * g.mean.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
  g.std_error = (var / n).cwiseSqrt();
  g.max_std_error = g.std_error.maxCoeff();
  return g;
}

McEstimate mc_loss(const LinearScoreModel& model, const DataDistribution& dist, double alpha,
                   int num_samples, std::uint64_t seed) {
  require_alpha(alpha);
  require_dims(model.dim(), dist.dim());
  if (num_samples < 2) throw Error(ErrorCode::BadParam, "num_samples must be >= 2");
  const Eigen::MatrixXd wt = model.weights().transpose();
  double sum = 0.0, sumsq = 0.0;
  for_each_block(num_samples, [&](int b, int size) {
    Block blk = draw_block(dist, alpha, size, derive_seed(seed, static_cast<std::uint64_t>(b)));
    const Eigen::VectorXd l = (blk.xt * wt - blk.eps).rowwise().squaredNorm();
    sum += l.sum();
    sumsq += l.squaredNorm();
  });
  return finish_scalar(sum, sumsq, num_samples);
}

McEstimate mc_directional_correlation(const LinearScoreModel& model, const DataDistribution& dist,
                                      double alpha, const Eigen::VectorXd& v, int num_samples,
                                      std::uint64_t seed) {
  require_alpha(alpha);
  require_dims(model.dim(), dist.dim());
  if (v.size() != dist.dim()) throw Error(ErrorCode::AmbientMismatch, "v has wrong dimension");
  if (num_samples < 2) throw Error(ErrorCode::BadParam, "num_samples must be >= 2");
  const Eigen::MatrixXd wt = model.weights().transpose();
  double sum = 0.0, sumsq = 0.0;
  for_each_block(num_samples, [&](int b, int size) {
    Block blk = draw_block(dist, alpha, size, derive_seed(seed, static_cast<std::uint64_t>(b)));
    const Eigen::VectorXd rv = (blk.xt * wt - blk.eps) * v;
    const Eigen::VectorXd xv = blk.xt * v;
    const Eigen::VectorXd prod = rv.cwiseProduct(xv);
    sum += prod.sum();
    sumsq += prod.squaredNorm();
  });
  return finish_scalar(sum, sumsq, num_samples);
}

Eigen::MatrixXd mc_second_moment(const DataDistribution& dist, double alpha, int num_samples,
                                 std::uint64_t seed) {
  require_alpha(alpha);
  if (num_samples < 1) throw Error(ErrorCode::BadParam, "num_samples must be >= 1");
  const int d = dist.dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for_each_block(num_samples, [&](int b, int size) {
    Block blk = draw_block(dist, alpha, size, derive_seed(seed, static_cast<std::uint64_t>(b)));
    sum.noalias() += blk.xt.transpose() * blk.xt;
  });
  return sum / static_cast<double>(num_samples);
}

}  // namespace rlab
