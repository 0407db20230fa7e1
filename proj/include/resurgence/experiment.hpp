#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "resurgence/audit.hpp"
#include "resurgence/finetune.hpp"
#include "resurgence/serialize.hpp"
#include "resurgence/unlearn.hpp"

namespace rlab {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes shared by the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitIo = 2,
  kExitViolations = 3,
};

struct SweepConfig {
  std::vector<int> ambient_dims{8, 16, 32, 64};
  std::vector<int> rank_c_list;  // empty: 1..d/4 for each d
  std::vector<int> rank_s_list;  // empty: 1..d/4 for each d
  std::vector<double> gamma_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> alpha_grid{0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0};
  std::vector<SigmaFamily> sigma_families{SigmaFamily::Free, SigmaFamily::SSupported};
  std::vector<UnlearnMethod> unlearn_methods{UnlearnMethod::Projection};
  FineTuneConfig finetune;
  bool auto_learning_rate = true;  // learning_rate omitted or null in the file
  ScheduleKind schedule_kind = ScheduleKind::Linear;  // for uniform alpha mode
  int schedule_steps = 50;
  int unlearn_steps = 500;  // gradient unlearning
  int replicates = 1;
  int lemma1_trials = 20;
  int lemma2_mc_samples = 0;
  std::string output_dir;
  std::uint64_t master_seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
  AuditGrid audit_grid() const;
};

// Accepts JSON. Every field except output_dir has a default.
SweepConfig config_from_json(const Json& j);
SweepConfig load_config(const std::string& path);
Json to_json(const SweepConfig& c);

// Applies RESURGENCE_LAB_SEED when set.
void apply_seed_override(SweepConfig& config);

struct AuditOutcome {
  AuditResult result;
  Json report;
  std::string report_path;
  std::string summary_path;
};

// Writes audit_report.json and audit_summary.csv into output_dir.
AuditOutcome run_audit(const SweepConfig& config, int jobs);
void print_audit_table(std::ostream& out, const AuditResult& result);

struct SweepRow {
  AuditCell cell;
  UnlearnMethod method = UnlearnMethod::Projection;
  std::string status = "ok";
  double gamma_restricted = 0.0;
  double gamma_literal = 0.0;
  double unlearn_residual = 0.0;
  double learning_rate = 0.0;
  double final_concept_energy = 0.0;
  double final_signal_energy = 0.0;
  double max_grad_mass_c = 0.0;
  double gradient_bound_restricted = 0.0;
  double gradient_bound_literal = 0.0;
  double curvature_bound_restricted = 0.0;
  double curvature_bound_literal = 0.0;
  double lambda_max_c = 0.0;
  std::string trajectory_file;  // relative to output_dir
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::string summary_path;
};

inline constexpr const char* kSummaryHeader =
    "cell,d,rank_c,rank_s,gamma_target,gamma_restricted,gamma_literal,alpha,sigma_family,"
    "replicate,method,status,unlearn_residual,learning_rate,final_concept_energy,"
    "final_signal_energy,max_grad_mass_C,gradient_bound_restricted,gradient_bound_literal,"
    "curvature_bound_restricted,curvature_bound_literal,lambda_max_C,trajectory_file";

// Per cell and method: unlearn, fine-tune, write trajectories/<cell>_<method>.csv.
// Writes sweep_summary.csv and sweep_manifest.json. Diverged runs are recorded
// in the status column.
SweepOutcome run_sweep(const SweepConfig& config, int jobs);

// Rebuilds the unlearned starting model and fine-tune inputs of a sweep row.
struct SweepInputs {
  CellGeometry geometry;
  LinearScoreModel start;
  NoiseSchedule schedule;
  FineTuneConfig finetune;
  double unlearn_residual = 0.0;
};
SweepInputs sweep_inputs(const SweepConfig& config, const AuditCell& cell, UnlearnMethod method);

std::vector<std::string> demo_names();
// Prints the walkthrough to `out` and writes demo_<name>.json to output_dir.
Json run_demo(const std::string& name, const std::string& output_dir, std::ostream& out);

}  // namespace rlab
