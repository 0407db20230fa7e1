// resurgence-lab: bound audits, fine-tuning sweeps and guided demos for the
// linear diffusion resurgence model.

#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "resurgence/errors.hpp"
#include "resurgence/experiment.hpp"

namespace {

int exit_code_for(const rlab::Error& e) {
  switch (e.code()) {
    case rlab::ErrorCode::IoError: return rlab::kExitIo;
    default: return rlab::kExitConfig;
  }
}

int default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear diffusion concept-resurgence lab"};
  app.require_subcommand(1);

  std::string audit_config;
  int audit_jobs = default_jobs();
  auto* audit = app.add_subcommand("audit", "Evaluate the resurgence bounds over an instance grid");
  audit->add_option("--config", audit_config, "JSON config file")->required();
  audit->add_option("--jobs", audit_jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string sweep_config;
  int sweep_jobs = default_jobs();
  auto* sweep = app.add_subcommand("sweep", "Unlearn then fine-tune over a grid, writing trajectories");
  sweep->add_option("--config", sweep_config, "JSON config file")->required();
  sweep->add_option("--jobs", sweep_jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string demo_name;
  std::string demo_out = ".";
  auto* demo = app.add_subcommand("demo", "Run a guided scenario");
  demo->add_option("name", demo_name, "equality_case | leakage_sweep | timestep_amplification")->required();
  demo->add_option("--out", demo_out, "Directory for the JSON record");

  auto* version = app.add_subcommand("version", "Print version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : rlab::kExitConfig;
  }

  try {
    if (*version) {
      std::cout << "resurgence-lab " << rlab::kVersion << "\n";
      return rlab::kExitOk;
    }
    if (*audit) {
      rlab::SweepConfig config = rlab::load_config(audit_config);
      rlab::apply_seed_override(config);
      const auto outcome = rlab::run_audit(config, audit_jobs);
      rlab::print_audit_table(std::cout, outcome.result);
      std::cout << "wrote " << outcome.report_path << " and " << outcome.summary_path << "\n";
      return outcome.result.gated_violations() == 0 ? rlab::kExitOk : rlab::kExitViolations;
    }
    if (*sweep) {
      rlab::SweepConfig config = rlab::load_config(sweep_config);
      rlab::apply_seed_override(config);
      const auto outcome = rlab::run_sweep(config, sweep_jobs);
      long diverged = 0;
      for (const auto& r : outcome.rows) diverged += r.status != "ok";
      std::cout << "runs: " << outcome.rows.size() << "  diverged: " << diverged << "\n"
                << "wrote " << outcome.summary_path << "\n";
      return rlab::kExitOk;
    }
    if (*demo) {
      rlab::run_demo(demo_name, demo_out, std::cout);
      return rlab::kExitOk;
    }
  } catch (const rlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return rlab::kExitOk;
}
