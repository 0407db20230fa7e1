#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resurgence/diffusion.hpp"
#include "resurgence/subspace.hpp"

namespace rlab {

enum class BoundId {
  GradientResurgence,    // ||P_C grad|| >= 2 sqrt(1-a) sqrt(gamma)
  CurvatureSensitivity,  // ||P_C dW|| >= 2 sqrt(1-a) sqrt(gamma) / (a lmax_C + 1 - a)
  UpdateLowerBound,      // ||P_C dW|| >= ||P_C grad|| / (2 (a lmax_C + 1 - a))
  Lemma1Literal,         // ||P_C X||^2 >= gamma_literal ||P_S X||^2
  Lemma1Stated,          // ||P_C X||^2 >= gamma_restricted ||P_S X||^2
  Lemma1Restricted,      // ||P_C P_S X||^2 >= gamma_restricted ||P_S X||^2
  Lemma2Identity,        // |v^T A v| == |v^T W Sigma_t v - sqrt(1-a)|
};

enum class GammaVariant { Restricted, Literal, None };

// Covariance families used when generating audit instances.
enum class SigmaFamily {
  Free,        // Sigma = G G^T / d, G Gaussian
  SSupported,  // Sigma supported on S
  CPerp,       // Sigma supported on the complement of C
  Identity,
};

std::string to_string(BoundId id);
std::string to_string(GammaVariant variant);
std::string to_string(SigmaFamily family);
SigmaFamily sigma_family_from_string(const std::string& name);

// Enough to rebuild an instance from its seed, plus the evaluated sides.
// `matrices` is filled only for counterexamples.
struct AuditInstance {
  std::uint64_t seed = 0;
  long trial = -1;
  int d = 0;
  int rank_c = 0;
  int rank_s = 0;
  double alpha = 1.0;
  double gamma_target = 0.0;
  double gamma_restricted = 0.0;
  double gamma_literal = 0.0;
  SigmaFamily family = SigmaFamily::Free;
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  std::map<std::string, Eigen::MatrixXd> matrices;
};

// Violation and slack summary for one bound under one gamma reading. Reports
// merge with min/count reductions; ties on slack break on (seed, trial), so
// the merged result does not depend on evaluation order.
struct BoundReport {
  BoundId bound_id = BoundId::GradientResurgence;
  GammaVariant gamma = GammaVariant::Restricted;
  double tolerance = 1e-9;
  long trials = 0;
  long violations = 0;
  long equality_cases = 0;  // |slack| <= tolerance
  double min_slack = 0.0;   // valid when trials > 0
  AuditInstance worst_instance;
  std::vector<AuditInstance> counterexamples;  // smallest slack first

  static constexpr std::size_t kMaxCounterexamples = 8;

  BoundReport() = default;
  BoundReport(BoundId id, GammaVariant variant, double tol) : bound_id(id), gamma(variant), tolerance(tol) {}

  // `fill_matrices` is invoked only when the trial is a violation.
  template <typename Fill>
  void record(AuditInstance instance, Fill&& fill_matrices);
  void record(const AuditInstance& instance) {
    record(instance, [](AuditInstance&) {});
  }
  void merge(const BoundReport& other);
  std::string key() const { return to_string(bound_id) + "/" + to_string(gamma); }
};

double gradient_bound(double alpha, double gamma);
double curvature_bound(double alpha, double gamma, double lambda_max_c);

// lambda_max(P_C Sigma P_C), via the rank_c x rank_c form U_C^T Sigma U_C.
double lambda_max_C(const DataDistribution& dist, const Subspace& c);

// Random W (from seed) pushed through project_unlearn.
LinearScoreModel random_unlearned_model(const Subspace& c, std::uint64_t seed);

struct GradientCheck {
  double measured = 0.0;     // ||P_C grad L_t||_F
  double closed_form = 0.0;  // 2 sqrt(1-a) sqrt(rank_c)
  double gamma_restricted = 0.0;
  double gamma_literal = 0.0;
  double bound_restricted = 0.0;
  double bound_literal = 0.0;
  double slack_restricted = 0.0;
  double slack_literal = 0.0;
};

GradientCheck check_gradient_resurgence(const DataDistribution& dist, const Subspace& c,
                                        const Subspace& s, double alpha, std::uint64_t seed);

struct CurvatureCheck {
  double measured = 0.0;  // ||P_C dW||_F for the optimal projected step
  double gradient_mass = 0.0;
  double lambda_max_c = 0.0;
  double gamma_restricted = 0.0;
  double gamma_literal = 0.0;
  double bound_restricted = 0.0;
  double bound_literal = 0.0;
  double update_bound = 0.0;  // ||G|| / (2 (a lmax_C + 1 - a))
  double slack_restricted = 0.0;
  double slack_literal = 0.0;
  double slack_update = 0.0;
  bool equality = false;  // |slack_restricted| <= 1e-9
};

CurvatureCheck check_curvature_sensitivity(const DataDistribution& dist, const Subspace& c,
                                           const Subspace& s, double alpha, std::uint64_t seed);

struct Lemma1Reports {
  BoundReport literal{BoundId::Lemma1Literal, GammaVariant::Literal, 1e-9};
  BoundReport stated{BoundId::Lemma1Stated, GammaVariant::Restricted, 1e-9};
  BoundReport restricted{BoundId::Lemma1Restricted, GammaVariant::Restricted, 1e-9};
};

// Random d x d Gaussian X per trial; X_i drawn from derive_seed(seed, i).
Lemma1Reports lemma1_audit(const Subspace& s, const Subspace& c, int num_trials, std::uint64_t seed);

struct Lemma2Check {
  double quadratic_form = 0.0;  // v^T A v
  double lhs = 0.0;             // |<A, v v^T>|
  double rhs = 0.0;             // |v^T W Sigma_t v - sqrt(1-a)|
  double identity_gap = 0.0;
  double mc_mean = 0.0;
  double mc_std_error = 0.0;
  bool identity_holds = false;  // gap <= 1e-12
  bool mc_agrees = true;        // |mc - v^T A v| <= 4 SE; true when num_mc == 0
};

// num_mc == 0 skips the Monte-Carlo side.
Lemma2Check lemma2_check(const LinearScoreModel& model, const DataDistribution& dist, double alpha,
                         const Eigen::VectorXd& v, int num_mc, std::uint64_t seed);

// Covariance for a family; `s` and `c` locate the supported families.
DataDistribution make_distribution(SigmaFamily family, const Subspace& c, const Subspace& s,
                                   std::uint64_t seed);

struct AuditGrid {
  std::vector<int> ambient_dims{8, 16, 32, 64};
  std::vector<int> rank_c_list;  // empty: 1..d/4
  std::vector<int> rank_s_list;  // empty: 1..d/4
  std::vector<double> gamma_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> alpha_grid{0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0};
  std::vector<SigmaFamily> families{SigmaFamily::Free, SigmaFamily::SSupported};
  int replicates = 1;
  int lemma1_trials = 20;   // per subspace pair
  int lemma2_mc_samples = 0;
  std::uint64_t master_seed = 0;
};

struct AuditCell {
  long index = 0;
  int d = 0;
  int rank_c = 0;
  int rank_s = 0;
  double gamma_target = 0.0;
  double alpha = 1.0;
  SigmaFamily family = SigmaFamily::Free;
  int replicate = 0;
  std::uint64_t seed = 0;
  bool lemma1_representative = false;  // first alpha and family of its subspace pair
};

// Feasible cells in a fixed nested order (d, rank_c, rank_s, gamma, alpha,
// family, replicate). Infeasible overlap targets are skipped.
std::vector<AuditCell> enumerate_cells(const AuditGrid& grid);

// Subspaces and covariance for a cell, rebuilt from cell.seed.
struct CellGeometry {
  Subspace c;
  Subspace s;
  DataDistribution dist;
};
CellGeometry build_geometry(const AuditCell& cell);

struct AuditResult {
  std::vector<BoundReport> reports;  // fixed order
  // The same reports restricted to each covariance family.
  std::map<SigmaFamily, std::vector<BoundReport>> by_family;
  long cells = 0;
  long subspace_pairs = 0;
  double max_closed_form_error = 0.0;  // |measured - 2 sqrt(1-a) sqrt(k)| worst case
  // Violations of the bounds expected to hold: gradient resurgence, update
  // lower bound, literal and restricted projection inequality, residual
  // identity. Gates the CLI exit status.
  long gated_violations() const;
};

// Evaluates every bound over the grid on `jobs` worker threads. Results are
// independent of `jobs`.
AuditResult run_bound_audit(const AuditGrid& grid, int jobs);

}  // namespace rlab

#include "resurgence/audit_impl.hpp"
