#include "resurgence/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"

namespace rlab {
namespace {

void require_dim(int a, int b) {
  if (a != b)
    throw Error(ErrorCode::AmbientMismatch,
                "dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

TrajectoryRecord measure(const Eigen::MatrixXd& w, const DataDistribution& dist, const Subspace& c,
                         const NoiseSchedule& schedule, const FineTuneConfig& config,
                         const Eigen::MatrixXd& grad) {
  LinearScoreModel model(w);
  TrajectoryRecord r;
  r.alpha = effective_alpha(config, schedule);
  r.loss = finetune_loss(model, dist, schedule, config);
  r.concept_energy = concept_energy(model, c);
  r.signal_energy = signal_energy(model, c, dist);
  r.grad_mass_c = (c.basis().transpose() * grad).norm();
  return r;
}

}  // namespace

std::string to_string(AlphaMode mode) {
  return mode == AlphaMode::Fixed ? "fixed" : "uniform";
}

std::string to_string(GradientMode mode) {
  return mode == GradientMode::Exact ? "exact" : "stochastic";
}

AlphaMode alpha_mode_from_string(const std::string& name) {
  if (name == "fixed") return AlphaMode::Fixed;
  if (name == "uniform" || name == "uniform-over-schedule") return AlphaMode::UniformOverSchedule;
  throw Error(ErrorCode::BadParam, "unknown alpha mode '" + name + "'");
}

GradientMode gradient_mode_from_string(const std::string& name) {
  if (name == "exact") return GradientMode::Exact;
  if (name == "stochastic") return GradientMode::Stochastic;
  throw Error(ErrorCode::BadParam, "unknown gradient mode '" + name + "'");
}

void FineTuneConfig::validate() const {
  // A zero learning rate is accepted and yields a constant trajectory.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::BadParam, "learning_rate must be finite and >= 0");
  if (steps < 1) throw Error(ErrorCode::BadParam, "steps must be >= 1");
  if (gradient_mode == GradientMode::Stochastic && batch_size < 1)
    throw Error(ErrorCode::BadParam, "batch_size must be >= 1");
  if (alpha_mode == AlphaMode::Fixed) require_alpha(fixed_alpha);
}

double concept_energy(const LinearScoreModel& model, const Subspace& c) {
  require_dim(model.dim(), c.ambient_dim());
  return (c.basis().transpose() * model.weights()).norm();
}

double signal_energy(const LinearScoreModel& model, const Subspace& c, const DataDistribution& dist) {
  require_dim(model.dim(), c.ambient_dim());
  require_dim(model.dim(), dist.dim());
  return (c.basis().transpose() * model.weights() * dist.covariance()).norm();
}

double default_learning_rate(const DataDistribution& dist, const std::vector<double>& alphas) {
  if (alphas.empty()) throw Error(ErrorCode::BadParam, "no alphas given");
  const double a = *std::min_element(alphas.begin(), alphas.end());
  require_alpha(a);
  // lambda_max(Sigma_t) = a lambda_max(Sigma) + (1 - a)
  const double top = a * dist.lambda_max() + (1.0 - a);
  return top > 0.0 ? 0.05 / top : 0.05;
}

double effective_alpha(const FineTuneConfig& config, const NoiseSchedule& schedule) {
  if (config.alpha_mode == AlphaMode::Fixed) return config.fixed_alpha;
  const auto& a = schedule.alphas();
  return std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

double finetune_loss(const LinearScoreModel& model, const DataDistribution& dist,
                     const NoiseSchedule& schedule, const FineTuneConfig& config) {
  if (config.alpha_mode == AlphaMode::Fixed) return expected_loss(model, dist, config.fixed_alpha);
  double total = 0.0;
  for (double a : schedule.alphas()) total += expected_loss(model, dist, a);
  return total / schedule.num_steps();
}

Eigen::MatrixXd finetune_gradient(const LinearScoreModel& model, const DataDistribution& dist,
                                  const NoiseSchedule& schedule, const FineTuneConfig& config) {
  if (config.alpha_mode == AlphaMode::Fixed)
    return analytic_gradient(model, dist, config.fixed_alpha);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  for (double a : schedule.alphas()) total += analytic_gradient(model, dist, a);
  return total / schedule.num_steps();
}

Trajectory finetune(const LinearScoreModel& start, const DataDistribution& dist, const Subspace& c,
                    const NoiseSchedule& schedule, const FineTuneConfig& config) {
  config.validate();
  require_dim(start.dim(), dist.dim());
  require_dim(start.dim(), c.ambient_dim());

  const int every = (config.steps + 49) / 50;
  Trajectory traj;
  traj.records.reserve(static_cast<std::size_t>(config.steps) + 1);

  Eigen::MatrixXd w = start.weights();
  double last_update = 0.0;
  for (int k = 0;; ++k) {
    LinearScoreModel model(w);
    const Eigen::MatrixXd exact = finetune_gradient(model, dist, schedule, config);
    TrajectoryRecord rec = measure(w, dist, c, schedule, config, exact);
    if (!std::isfinite(rec.loss))
      throw Error(ErrorCode::Diverged, "loss non-finite at step " + std::to_string(k), k);
    rec.step = k;
    rec.update_norm = last_update;
    traj.records.push_back(rec);
    if (k == 0 || k == config.steps || k % every == 0) traj.checkpoints.push_back({k, w});
    if (k == config.steps) break;

    Eigen::MatrixXd grad;
    if (config.gradient_mode == GradientMode::Exact) {
      grad = exact;
    } else {
      const std::uint64_t step_seed = derive_seed(config.seed, static_cast<std::uint64_t>(k));
      double alpha = config.fixed_alpha;
      if (config.alpha_mode == AlphaMode::UniformOverSchedule) {
        Rng pick(derive_seed(step_seed, 0x7));
        alpha = schedule.alphas()[pick.index(schedule.alphas().size())];
      }
      grad = mc_gradient(model, dist, alpha, std::max(2, config.batch_size), step_seed).mean;
    }
    const Eigen::MatrixXd delta = -config.learning_rate * grad;
    w += delta;
    last_update = delta.norm();
    if (!w.allFinite())
      throw Error(ErrorCode::Diverged, "weights non-finite at step " + std::to_string(k + 1), k + 1);
  }
  return traj;
}

TrajectoryRecord evaluate_state(const LinearScoreModel& model, const DataDistribution& dist,
                                const Subspace& c, const NoiseSchedule& schedule,
                                const FineTuneConfig& config, const TrajectoryRecord& reference) {
  const Eigen::MatrixXd grad = finetune_gradient(model, dist, schedule, config);
  TrajectoryRecord r = measure(model.weights(), dist, c, schedule, config, grad);
  r.step = reference.step;
  r.update_norm = reference.update_norm;
  return r;
}

OptimalStep optimal_step_update(const LinearScoreModel& model, const DataDistribution& dist,
                                const Subspace& c, double alpha) {
  require_dim(model.dim(), c.ambient_dim());
  const Eigen::MatrixXd grad = analytic_gradient(model, dist, alpha);
  const Eigen::MatrixXd& u = c.basis();
  const Eigen::MatrixXd g = u * (u.transpose() * grad);

  OptimalStep out;
  out.gradient_norm = g.norm();
  out.delta = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  // Round-off level projections count as G = 0.
  if (out.gradient_norm <= 1e-12 * std::max(1.0, grad.norm())) return out;

  out.curvature = curvature_term(g, dist, alpha);
  if (out.curvature <= 1e-14)
    throw Error(ErrorCode::DegenerateCurvature,
                "curvature " + std::to_string(out.curvature) + " along nonzero projected gradient");
  const double g2 = out.gradient_norm * out.gradient_norm;
  out.eta_star = g2 / out.curvature;
  out.delta = -out.eta_star * g;
  out.update_norm = g2 * out.gradient_norm / out.curvature;
  return out;
}

}  // namespace rlab
