#include "resurgence/audit.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "resurgence/errors.hpp"
#include "resurgence/finetune.hpp"
#include "resurgence/random.hpp"
#include "resurgence/unlearn.hpp"

namespace rlab {
namespace detail {

void insert_counterexample(std::vector<AuditInstance>& list, AuditInstance instance,
                           std::size_t cap) {
  auto pos = std::upper_bound(list.begin(), list.end(), instance,
                              [](const AuditInstance& a, const AuditInstance& b) { return worse_than(a, b); });
  list.insert(pos, std::move(instance));
  if (list.size() > cap) list.resize(cap);
}

}  // namespace detail

namespace {

constexpr double kClosedFormTol = 1e-9;
constexpr double kIdentityTol = 1e-12;

enum ReportSlot {
  kGradRestricted,
  kGradLiteral,
  kCurvRestricted,
  kCurvLiteral,
  kUpdate,
  kL1Literal,
  kL1Stated,
  kL1Restricted,
  kL2Identity,
  kNumSlots,
};

std::vector<BoundReport> empty_reports() {
  return {
      BoundReport(BoundId::GradientResurgence, GammaVariant::Restricted, kClosedFormTol),
      BoundReport(BoundId::GradientResurgence, GammaVariant::Literal, kClosedFormTol),
      BoundReport(BoundId::CurvatureSensitivity, GammaVariant::Restricted, kClosedFormTol),
      BoundReport(BoundId::CurvatureSensitivity, GammaVariant::Literal, kClosedFormTol),
      BoundReport(BoundId::UpdateLowerBound, GammaVariant::None, kClosedFormTol),
      BoundReport(BoundId::Lemma1Literal, GammaVariant::Literal, kClosedFormTol),
      BoundReport(BoundId::Lemma1Stated, GammaVariant::Restricted, kClosedFormTol),
      BoundReport(BoundId::Lemma1Restricted, GammaVariant::Restricted, kClosedFormTol),
      BoundReport(BoundId::Lemma2Identity, GammaVariant::None, kIdentityTol),
  };
}

void require_bound_params(double alpha, double gamma) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::BadParam, "alpha must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::BadParam, "gamma must lie in [0, 1]");
}

AuditInstance base_instance(const AuditCell& cell, const CellGeometry& geo, double gr, double gl) {
  AuditInstance inst;
  inst.seed = cell.seed;
  inst.d = cell.d;
  inst.rank_c = geo.c.rank();
  inst.rank_s = geo.s.rank();
  inst.alpha = cell.alpha;
  inst.gamma_target = cell.gamma_target;
  inst.gamma_restricted = gr;
  inst.gamma_literal = gl;
  inst.family = cell.family;
  return inst;
}

AuditInstance with_sides(AuditInstance inst, double measured, double bound) {
  inst.measured = measured;
  inst.bound = bound;
  inst.slack = measured - bound;
  return inst;
}

void fill_geometry(AuditInstance& inst, const CellGeometry& geo) {
  inst.matrices["basis_c"] = geo.c.basis();
  inst.matrices["basis_s"] = geo.s.basis();
  inst.matrices["sigma"] = geo.dist.covariance();
}

struct Partial {
  std::vector<BoundReport> reports = empty_reports();
  std::map<SigmaFamily, std::vector<BoundReport>> by_family;
  double max_closed_form_error = 0.0;
  long cells = 0;
  long pairs = 0;
};

void evaluate_cell(const AuditCell& cell, const AuditGrid& grid, Partial& out) {
  const CellGeometry geo = build_geometry(cell);
  const double gr = leakage_restricted(geo.s, geo.c);
  const double gl = leakage_literal(geo.s, geo.c);
  const AuditInstance base = base_instance(cell, geo, gr, gl);
  std::vector<BoundReport> local = empty_reports();
  const std::uint64_t model_seed = derive_seed(cell.seed, 10);
  auto fill_with_w = [&](AuditInstance& inst) {
    fill_geometry(inst, geo);
    inst.matrices["weights"] = random_unlearned_model(geo.c, model_seed).weights();
  };

  const GradientCheck g = check_gradient_resurgence(geo.dist, geo.c, geo.s, cell.alpha, model_seed);
  out.max_closed_form_error = std::max(out.max_closed_form_error, std::abs(g.measured - g.closed_form));
  local[kGradRestricted].record(with_sides(base, g.measured, g.bound_restricted), fill_with_w);
  local[kGradLiteral].record(with_sides(base, g.measured, g.bound_literal), fill_with_w);

  const CurvatureCheck k = check_curvature_sensitivity(geo.dist, geo.c, geo.s, cell.alpha, model_seed);
  local[kCurvRestricted].record(with_sides(base, k.measured, k.bound_restricted), fill_with_w);
  local[kCurvLiteral].record(with_sides(base, k.measured, k.bound_literal), fill_with_w);
  local[kUpdate].record(with_sides(base, k.measured, k.update_bound), fill_with_w);

  {
    // Residual identity on an unconstrained W and random unit v.
    Rng rng(derive_seed(cell.seed, 20));
    const int d = cell.d;
    LinearScoreModel w(rng.gaussian(d, d) / std::sqrt(static_cast<double>(d)));
    const Eigen::VectorXd v = rng.unit_vector(d);
    const Lemma2Check l2 = lemma2_check(w, geo.dist, cell.alpha, v, grid.lemma2_mc_samples,
                                        derive_seed(cell.seed, 21));
    AuditInstance inst = base;
    inst.measured = l2.lhs;
    inst.bound = l2.rhs;
    inst.slack = -l2.identity_gap;
    local[kL2Identity].record(inst, [&](AuditInstance& i) {
      fill_geometry(i, geo);
      i.matrices["weights"] = w.weights();
      i.matrices["v"] = v;
    });
  }

  if (cell.lemma1_representative && grid.lemma1_trials > 0) {
    Lemma1Reports l1 = lemma1_audit(geo.s, geo.c, grid.lemma1_trials, derive_seed(cell.seed, 30));
    for (auto* r : {&l1.literal, &l1.stated, &l1.restricted}) {
      // lemma1_audit keys instances by its own seed; attach the cell identity.
      auto patch = [&](AuditInstance& i) {
        i.alpha = cell.alpha;
        i.gamma_target = cell.gamma_target;
        i.family = cell.family;
      };
      patch(r->worst_instance);
      for (auto& ce : r->counterexamples) patch(ce);
    }
    local[kL1Literal].merge(l1.literal);
    local[kL1Stated].merge(l1.stated);
    local[kL1Restricted].merge(l1.restricted);
    ++out.pairs;
  }
  auto& fam = out.by_family[cell.family];
  if (fam.empty()) fam = empty_reports();
  for (std::size_t r = 0; r < local.size(); ++r) {
    out.reports[r].merge(local[r]);
    fam[r].merge(local[r]);
  }
  ++out.cells;
}

}  // namespace

std::string to_string(BoundId id) {
  switch (id) {
    case BoundId::GradientResurgence: return "gradient_resurgence";
    case BoundId::CurvatureSensitivity: return "curvature_sensitivity";
    case BoundId::UpdateLowerBound: return "update_lower_bound";
    case BoundId::Lemma1Literal: return "lemma1_literal";
    case BoundId::Lemma1Stated: return "lemma1_stated";
    case BoundId::Lemma1Restricted: return "lemma1_restricted";
    case BoundId::Lemma2Identity: return "lemma2_identity";
  }
  return "unknown";
}

std::string to_string(GammaVariant variant) {
  switch (variant) {
    case GammaVariant::Restricted: return "restricted";
    case GammaVariant::Literal: return "literal";
    case GammaVariant::None: return "none";
  }
  return "none";
}

std::string to_string(SigmaFamily family) {
  switch (family) {
    case SigmaFamily::Free: return "free";
    case SigmaFamily::SSupported: return "s_supported";
    case SigmaFamily::CPerp: return "c_perp";
    case SigmaFamily::Identity: return "identity";
  }
  return "free";
}

SigmaFamily sigma_family_from_string(const std::string& name) {
  if (name == "free") return SigmaFamily::Free;
  if (name == "s_supported") return SigmaFamily::SSupported;
  if (name == "c_perp") return SigmaFamily::CPerp;
  if (name == "identity") return SigmaFamily::Identity;
  throw Error(ErrorCode::BadParam, "unknown sigma family '" + name + "'");
}

void BoundReport::merge(const BoundReport& other) {
  if (other.trials == 0) return;
  if (trials == 0 || detail::worse_than(other.worst_instance, worst_instance)) {
    min_slack = other.min_slack;
    worst_instance = other.worst_instance;
  }
  trials += other.trials;
  violations += other.violations;
  equality_cases += other.equality_cases;
  for (const auto& ce : other.counterexamples)
    detail::insert_counterexample(counterexamples, ce, kMaxCounterexamples);
}

double gradient_bound(double alpha, double gamma) {
  require_bound_params(alpha, gamma);
  return 2.0 * std::sqrt(1.0 - alpha) * std::sqrt(gamma);
}

double curvature_bound(double alpha, double gamma, double lambda_max_c) {
  require_bound_params(alpha, gamma);
  if (!(lambda_max_c >= 0.0)) throw Error(ErrorCode::BadParam, "lambda_max_c must be >= 0");
  const double top = gradient_bound(alpha, gamma);
  // alpha = 1 makes the numerator vanish; keep 0 / 0 at 0.
  if (top == 0.0 || std::isinf(lambda_max_c)) return 0.0;
  return top / (alpha * lambda_max_c + (1.0 - alpha));
}

double lambda_max_C(const DataDistribution& dist, const Subspace& c) {
  if (dist.dim() != c.ambient_dim()) throw Error(ErrorCode::AmbientMismatch, "dimension mismatch");
  const Eigen::MatrixXd& u = c.basis();
  Eigen::MatrixXd m = u.transpose() * dist.covariance() * u;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

LinearScoreModel random_unlearned_model(const Subspace& c, std::uint64_t seed) {
  Rng rng(seed);
  const int d = c.ambient_dim();
  LinearScoreModel w(rng.gaussian(d, d) / std::sqrt(static_cast<double>(d)));
  return project_unlearn(w, c).model;
}

GradientCheck check_gradient_resurgence(const DataDistribution& dist, const Subspace& c,
                                        const Subspace& s, double alpha, std::uint64_t seed) {
  const LinearScoreModel w = random_unlearned_model(c, seed);
  const Eigen::MatrixXd grad = analytic_gradient(w, dist, alpha);
  GradientCheck out;
  out.measured = (c.basis().transpose() * grad).norm();
  out.closed_form = 2.0 * std::sqrt(1.0 - alpha) * std::sqrt(static_cast<double>(c.rank()));
  out.gamma_restricted = leakage_restricted(s, c);
  out.gamma_literal = leakage_literal(s, c);
  out.bound_restricted = gradient_bound(alpha, out.gamma_restricted);
  out.bound_literal = gradient_bound(alpha, out.gamma_literal);
  out.slack_restricted = out.measured - out.bound_restricted;
  out.slack_literal = out.measured - out.bound_literal;
  return out;
}

CurvatureCheck check_curvature_sensitivity(const DataDistribution& dist, const Subspace& c,
                                           const Subspace& s, double alpha, std::uint64_t seed) {
  const LinearScoreModel w = random_unlearned_model(c, seed);
  const OptimalStep step = optimal_step_update(w, dist, c, alpha);
  CurvatureCheck out;
  out.measured = (c.basis().transpose() * step.delta).norm();
  out.gradient_mass = step.gradient_norm;
  out.lambda_max_c = lambda_max_C(dist, c);
  out.gamma_restricted = leakage_restricted(s, c);
  out.gamma_literal = leakage_literal(s, c);
  out.bound_restricted = curvature_bound(alpha, out.gamma_restricted, out.lambda_max_c);
  out.bound_literal = curvature_bound(alpha, out.gamma_literal, out.lambda_max_c);
  // A zero step (G below round-off) carries a zero bound.
  out.update_bound =
      step.eta_star == 0.0 ? 0.0 : step.gradient_norm / (2.0 * (alpha * out.lambda_max_c + (1.0 - alpha)));
  out.slack_restricted = out.measured - out.bound_restricted;
  out.slack_literal = out.measured - out.bound_literal;
  out.slack_update = out.measured - out.update_bound;
  out.equality = std::abs(out.slack_restricted) <= 1e-9;
  return out;
}

Lemma1Reports lemma1_audit(const Subspace& s, const Subspace& c, int num_trials, std::uint64_t seed) {
  if (num_trials < 1) throw Error(ErrorCode::BadParam, "num_trials must be >= 1");
  if (s.ambient_dim() != c.ambient_dim()) throw Error(ErrorCode::AmbientMismatch, "dimension mismatch");
  const int d = s.ambient_dim();
  const double gr = leakage_restricted(s, c);
  const double gl = leakage_literal(s, c);
  const Eigen::MatrixXd& uc = c.basis();
  const Eigen::MatrixXd& us = s.basis();
  const Eigen::MatrixXd cs = uc.transpose() * us;

  Lemma1Reports out;
  AuditInstance base;
  base.seed = seed;
  base.d = d;
  base.rank_c = c.rank();
  base.rank_s = s.rank();
  base.gamma_restricted = gr;
  base.gamma_literal = gl;

  for (int i = 0; i < num_trials; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Eigen::MatrixXd x = rng.gaussian(d, d);
    const Eigen::MatrixXd sx = us.transpose() * x;
    const double pcx = (uc.transpose() * x).squaredNorm();
    const double psx = sx.squaredNorm();
    const double pcpsx = (cs * sx).squaredNorm();

    auto fill = [&](AuditInstance& inst) {
      inst.matrices["x"] = x;
      inst.matrices["basis_c"] = uc;
      inst.matrices["basis_s"] = us;
    };
    AuditInstance inst = base;
    inst.trial = i;
    out.literal.record(with_sides(inst, pcx, gl * psx), fill);
    out.stated.record(with_sides(inst, pcx, gr * psx), fill);
    out.restricted.record(with_sides(inst, pcpsx, gr * psx), fill);
  }
  return out;
}

Lemma2Check lemma2_check(const LinearScoreModel& model, const DataDistribution& dist, double alpha,
                         const Eigen::VectorXd& v, int num_mc, std::uint64_t seed) {
  if (v.size() != model.dim()) throw Error(ErrorCode::BadVector, "v has wrong dimension");
  if (!(std::abs(v.norm() - 1.0) <= 1e-10))
    throw Error(ErrorCode::BadVector, "v must be a unit vector, |v| = " + std::to_string(v.norm()));
  const Eigen::MatrixXd a = residual_correlation(model, dist, alpha);
  Lemma2Check out;
  out.quadratic_form = v.dot(a * v);
  out.lhs = std::abs(out.quadratic_form);
  const Eigen::VectorXd st_v = sigma_t(dist, alpha) * v;
  out.rhs = std::abs(v.dot(model.weights() * st_v) - std::sqrt(1.0 - alpha));
  out.identity_gap = std::abs(out.lhs - out.rhs);
  out.identity_holds = out.identity_gap <= kIdentityTol;
  if (num_mc > 0) {
    const McEstimate mc = mc_directional_correlation(model, dist, alpha, v, num_mc, seed);
    out.mc_mean = mc.mean;
    out.mc_std_error = mc.std_error;
    out.mc_agrees = std::abs(mc.mean - out.quadratic_form) <= 4.0 * mc.std_error;
  }
  return out;
}

DataDistribution make_distribution(SigmaFamily family, const Subspace& c, const Subspace& s,
                                   std::uint64_t seed) {
  const int d = c.ambient_dim();
  Rng rng(seed);
  auto scaled = [&](const Eigen::MatrixXd& basis) {
    Eigen::VectorXd scale(basis.cols());
    for (Eigen::Index i = 0; i < scale.size(); ++i) scale(i) = std::sqrt(0.25 + 3.75 * rng.uniform());
    return Eigen::MatrixXd(basis * scale.asDiagonal());
  };
  switch (family) {
    case SigmaFamily::Free:
      return DataDistribution::from_factor(rng.gaussian(d, d) / std::sqrt(static_cast<double>(d)));
    case SigmaFamily::SSupported:
      return DataDistribution::from_factor(scaled(s.basis()));
    case SigmaFamily::CPerp: {
      const Eigen::MatrixXd comp = c.complement_basis();
      if (comp.cols() == 0) return DataDistribution::from_factor(Eigen::MatrixXd::Zero(d, 1));
      return DataDistribution::from_factor(scaled(comp));
    }
    case SigmaFamily::Identity:
      return DataDistribution::from_factor(Eigen::MatrixXd::Identity(d, d));
  }
  return DataDistribution::identity(d);
}

std::vector<AuditCell> enumerate_cells(const AuditGrid& grid) {
  std::vector<AuditCell> cells;
  long index = 0;
  auto ranks_for = [](const std::vector<int>& list, int d) {
    std::vector<int> out;
    if (list.empty()) {
      for (int r = 1; r <= std::max(1, d / 4); ++r) out.push_back(r);
    } else {
      for (int r : list)
        if (r >= 1 && r <= d) out.push_back(r);
    }
    return out;
  };
  for (int d : grid.ambient_dims) {
    const auto rcs = ranks_for(grid.rank_c_list, d);
    const auto rss = ranks_for(grid.rank_s_list, d);
    for (int rc : rcs)
      for (int rs : rss)
        for (double gamma : grid.gamma_grid) {
          if (gamma > 0.0 && rs > rc) continue;
          if (gamma < 1.0 && rc == d) continue;
          for (int rep = 0; rep < grid.replicates; ++rep)
            for (std::size_t ai = 0; ai < grid.alpha_grid.size(); ++ai)
              for (std::size_t fi = 0; fi < grid.families.size(); ++fi) {
                AuditCell cell;
                cell.index = index;
                cell.d = d;
                cell.rank_c = rc;
                cell.rank_s = rs;
                cell.gamma_target = gamma;
                cell.alpha = grid.alpha_grid[ai];
                cell.family = grid.families[fi];
                cell.replicate = rep;
                cell.seed = derive_seed(grid.master_seed, static_cast<std::uint64_t>(index));
                cell.lemma1_representative = ai == 0 && fi == 0;
                cells.push_back(cell);
                ++index;
              }
        }
  }
  return cells;
}

CellGeometry build_geometry(const AuditCell& cell) {
  Subspace c = Subspace::random(cell.d, cell.rank_c, derive_seed(cell.seed, 1));
  Subspace s = subspace_with_overlap(c, cell.gamma_target, cell.rank_s, derive_seed(cell.seed, 2));
  DataDistribution dist = make_distribution(cell.family, c, s, derive_seed(cell.seed, 3));
  return {std::move(c), std::move(s), std::move(dist)};
}

long AuditResult::gated_violations() const {
  long total = 0;
  for (const auto& r : reports) {
    const bool gated = (r.bound_id == BoundId::GradientResurgence) ||
                       r.bound_id == BoundId::UpdateLowerBound ||
                       r.bound_id == BoundId::Lemma1Restricted ||
                       r.bound_id == BoundId::Lemma1Literal ||
                       r.bound_id == BoundId::Lemma2Identity;
    if (gated) total += r.violations;
  }
  return total;
}

AuditResult run_bound_audit(const AuditGrid& grid, int jobs) {
  const std::vector<AuditCell> cells = enumerate_cells(grid);
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(1, cells.size()))));
  std::vector<Partial> partials(static_cast<std::size_t>(workers));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&](Partial& local) {
    try {
      for (std::size_t i = next++; i < cells.size(); i = next++) evaluate_cell(cells[i], grid, local);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = cells.size();
    }
  };
  if (workers == 1) {
    work(partials[0]);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, std::ref(partials[static_cast<std::size_t>(w)]));
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  AuditResult result;
  result.reports = empty_reports();
  for (const auto& p : partials) {
    for (std::size_t r = 0; r < result.reports.size(); ++r) result.reports[r].merge(p.reports[r]);
    for (const auto& [family, reps] : p.by_family) {
      auto& fam = result.by_family[family];
      if (fam.empty()) fam = empty_reports();
      for (std::size_t r = 0; r < reps.size(); ++r) fam[r].merge(reps[r]);
    }
    result.max_closed_form_error = std::max(result.max_closed_form_error, p.max_closed_form_error);
    result.cells += p.cells;
    result.subspace_pairs += p.pairs;
  }
  return result;
}

}  // namespace rlab
