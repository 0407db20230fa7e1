#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rlab {

enum class ScheduleKind { Linear, Cosine, SingleAlpha };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

// Cumulative signal coefficients alpha_t, t = 1..T. Forward corruption is
// x_t = sqrt(alpha_t) x_0 + sqrt(1 - alpha_t) eps.
class NoiseSchedule {
 public:
  // alpha runs linearly from 0.9999 down to 0.02.
  static NoiseSchedule linear(int num_steps);
  // Squared-cosine cumulative schedule (offset 0.008), floored at 0.02.
  static NoiseSchedule cosine(int num_steps);
  static NoiseSchedule single(double alpha);
  // Validating constructor used by deserialization.
  static NoiseSchedule from_alphas(ScheduleKind kind, std::vector<double> alphas);

  ScheduleKind kind() const { return kind_; }
  int num_steps() const { return static_cast<int>(alphas_.size()); }
  const std::vector<double>& alphas() const { return alphas_; }
  double min_alpha() const;

 private:
  NoiseSchedule(ScheduleKind kind, std::vector<double> alphas)
      : kind_(kind), alphas_(std::move(alphas)) {}
  ScheduleKind kind_;
  std::vector<double> alphas_;
};

// Linear noise-prediction model; residual eps_W(x_t, t) = W x_t - eps.
class LinearScoreModel {
 public:
  explicit LinearScoreModel(Eigen::MatrixXd weights);
  static LinearScoreModel zero(int d) { return LinearScoreModel(Eigen::MatrixXd::Zero(d, d)); }

  const Eigen::MatrixXd& weights() const { return weights_; }
  int dim() const { return static_cast<int>(weights_.rows()); }

 private:
  Eigen::MatrixXd weights_;
};

// Zero-mean Gaussian with covariance Sigma, sampled as x = F z with F F^T =
// Sigma. Eigenvalues in [-1e-10, 0) are clamped to zero when F is derived from
// Sigma.
class DataDistribution {
 public:
  explicit DataDistribution(Eigen::MatrixXd covariance);
  // Sigma = F F^T; skips the eigendecomposition.
  static DataDistribution from_factor(const Eigen::MatrixXd& factor);
  static DataDistribution identity(int d) { return DataDistribution(Eigen::MatrixXd::Identity(d, d)); }

  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  double lambda_max() const;
  int dim() const { return static_cast<int>(covariance_.rows()); }

 private:
  DataDistribution() = default;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;
};

Eigen::VectorXd corrupt(const Eigen::VectorXd& x0, const Eigen::VectorXd& eps, double alpha);

// Sigma_t = alpha Sigma + (1 - alpha) I.
Eigen::MatrixXd sigma_t(const DataDistribution& dist, double alpha);

// E||W x_t - eps||^2 = tr(W Sigma_t W^T) - 2 sqrt(1 - alpha) tr(W) + d.
double expected_loss(const LinearScoreModel& model, const DataDistribution& dist, double alpha);

// A = E[eps_W x_t^T] = W Sigma_t - sqrt(1 - alpha) I.
Eigen::MatrixXd residual_correlation(const LinearScoreModel& model, const DataDistribution& dist,
                                     double alpha);

// grad_W L_t = 2 A.
Eigen::MatrixXd analytic_gradient(const LinearScoreModel& model, const DataDistribution& dist,
                                  double alpha);

// <G, Hess L_t [G]> = 2 tr(G Sigma_t G^T).
double curvature_term(const Eigen::MatrixXd& direction, const DataDistribution& dist, double alpha);

// n x d, rows i.i.d. N(0, Sigma).
Eigen::MatrixXd sample_x0(const DataDistribution& dist, int n, std::uint64_t seed);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct McGradient {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_error;  // entrywise
  double max_std_error = 0.0;
};

// Monte-Carlo oracles. Samples are drawn in fixed-size blocks, each from its
// own substream derive_seed(seed, block), and reduced in block order.
McGradient mc_gradient(const LinearScoreModel& model, const DataDistribution& dist, double alpha,
                       int num_samples, std::uint64_t seed);
McEstimate mc_loss(const LinearScoreModel& model, const DataDistribution& dist, double alpha,
                   int num_samples, std::uint64_t seed);
// Estimates E[<eps_W, v> <x_t, v>], i.e. v^T A v.
McEstimate mc_directional_correlation(const LinearScoreModel& model, const DataDistribution& dist,
                                      double alpha, const Eigen::VectorXd& v, int num_samples,
                                      std::uint64_t seed);

// Empirical E[x_t x_t^T] from n samples; used by stochastic gradient modes.
Eigen::MatrixXd mc_second_moment(const DataDistribution& dist, double alpha, int num_samples,
                                 std::uint64_t seed);

}  // namespace rlab
