#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resurgence/diffusion.hpp"
#include "resurgence/subspace.hpp"

namespace rlab {

enum class AlphaMode { Fixed, UniformOverSchedule };
enum class GradientMode { Exact, Stochastic };

std::string to_string(AlphaMode mode);
std::string to_string(GradientMode mode);
AlphaMode alpha_mode_from_string(const std::string& name);
GradientMode gradient_mode_from_string(const std::string& name);

struct FineTuneConfig {
  double learning_rate = 0.01;
  int steps = 100;
  AlphaMode alpha_mode = AlphaMode::Fixed;
  double fixed_alpha = 0.75;  // used when alpha_mode == Fixed
  GradientMode gradient_mode = GradientMode::Exact;
  int batch_size = 1024;      // used when gradient_mode == Stochastic
  std::uint64_t seed = 0;

  void validate() const;
};

// Quantities recorded for each state W_k along a run. Loss and gradient mass
// always use the exact expected loss; update_norm is ||W_k - W_{k-1}||_F.
struct TrajectoryRecord {
  int step = 0;
  double alpha = 0.0;
  double loss = 0.0;
  double concept_energy = 0.0;  // ||P_C W||_F
  double signal_energy = 0.0;   // ||P_C W Sigma||_F
  double grad_mass_c = 0.0;     // ||P_C grad L_t||_F
  double update_norm = 0.0;
};

struct Checkpoint {
  int step = 0;
  Eigen::MatrixXd weights;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;  // steps + 1 entries
  std::vector<Checkpoint> checkpoints;    // every ceil(steps/50) plus endpoints
};

double concept_energy(const LinearScoreModel& model, const Subspace& c);
double signal_energy(const LinearScoreModel& model, const Subspace& c, const DataDistribution& dist);

// 0.05 / lambda_max(Sigma_t) at the smallest alpha of the schedule.
double default_learning_rate(const DataDistribution& dist, const std::vector<double>& alphas);

// Alpha used by a run: the fixed alpha, or the schedule mean when gradients are
// averaged over the schedule.
double effective_alpha(const FineTuneConfig& config, const NoiseSchedule& schedule);

// Exact (step-averaged for UniformOverSchedule) loss and gradient at W.
double finetune_loss(const LinearScoreModel& model, const DataDistribution& dist,
                     const NoiseSchedule& schedule, const FineTuneConfig& config);
Eigen::MatrixXd finetune_gradient(const LinearScoreModel& model, const DataDistribution& dist,
                                  const NoiseSchedule& schedule, const FineTuneConfig& config);

// Plain gradient descent W_{k+1} = W_k - lr grad L(W_k). Throws Diverged if the
// loss becomes non-finite.
Trajectory finetune(const LinearScoreModel& start, const DataDistribution& dist, const Subspace& c,
                    const NoiseSchedule& schedule, const FineTuneConfig& config);

// Recomputes the record of a stored state; step and update_norm are not
// recomputable and are copied from `reference`.
TrajectoryRecord evaluate_state(const LinearScoreModel& model, const DataDistribution& dist,
                                const Subspace& c, const NoiseSchedule& schedule,
                                const FineTuneConfig& config, const TrajectoryRecord& reference);

struct OptimalStep {
  Eigen::MatrixXd delta;     // -eta* G
  double eta_star = 0.0;     // ||G||^2 / c
  double curvature = 0.0;    // c = <G, Hess[G]>
  double gradient_norm = 0.0;  // ||G||_F
  double update_norm = 0.0;  // ||G||^3 / c
};

// Exact line minimizer along G = P_C grad L_t. Returns a zero update when
// ||G||_F <= 1e-12 max(1, ||grad||_F); throws DegenerateCurvature when c <= 1e-14
// with G != 0.
OptimalStep optimal_step_update(const LinearScoreModel& model, const DataDistribution& dist,
                                const Subspace& c, double alpha);

}  // namespace rlab
