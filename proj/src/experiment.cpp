#include "resurgence/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"

namespace fs = std::filesystem;

namespace rlab {
namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

template <typename T>
T read_field(const Json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(path + key, std::string("wrong type (") + e.what() + ")");
  }
}

template <typename T, typename Parse>
std::vector<T> read_enum_list(const Json& j, const std::string& key, const std::string& path,
                              std::vector<T> fallback, Parse parse) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const Json& v = j.at(key);
  std::vector<std::string> names;
  if (v.is_string()) {
    names.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) config_error(path + key + "[" + std::to_string(i) + "]", "expected a string");
      names.push_back(v[i].get<std::string>());
    }
  } else {
    config_error(path + key, "expected a string or list of strings");
  }
  std::vector<T> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    try {
      out.push_back(parse(names[i]));
    } catch (const Error& e) {
      config_error(path + key + "[" + std::to_string(i) + "]", e.what());
    }
  }
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::IoError, "cannot create output directory '" + dir + "'");
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << contents;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    try {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string fmt_fixed(double x, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

}  // namespace

void SweepConfig::validate() const {
  if (output_dir.empty()) config_error("output_dir", "required");
  if (ambient_dims.empty()) config_error("ambient_dims", "must be nonempty");
  for (std::size_t i = 0; i < ambient_dims.size(); ++i)
    if (ambient_dims[i] < 1 || ambient_dims[i] > 512)
      config_error("ambient_dims[" + std::to_string(i) + "]", "must lie in [1, 512]");
  for (std::size_t i = 0; i < rank_c_list.size(); ++i)
    if (rank_c_list[i] < 1) config_error("rank_c_list[" + std::to_string(i) + "]", "must be >= 1");
  for (std::size_t i = 0; i < rank_s_list.size(); ++i)
    if (rank_s_list[i] < 1) config_error("rank_s_list[" + std::to_string(i) + "]", "must be >= 1");
  if (gamma_grid.empty()) config_error("gamma_grid", "must be nonempty");
  for (std::size_t i = 0; i < gamma_grid.size(); ++i)
    if (!(gamma_grid[i] >= 0.0 && gamma_grid[i] <= 1.0))
      config_error("gamma_grid[" + std::to_string(i) + "]", "must lie in [0, 1]");
  if (alpha_grid.empty()) config_error("alpha_grid", "must be nonempty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i)
    if (!(alpha_grid[i] > 0.0 && alpha_grid[i] <= 1.0))
      config_error("alpha_grid[" + std::to_string(i) + "]", "must lie in (0, 1]");
  if (sigma_families.empty()) config_error("sigma_families", "must be nonempty");
  if (unlearn_methods.empty()) config_error("unlearn_method", "must be nonempty");
  if (replicates < 1) config_error("replicates", "must be >= 1");
  if (schedule_steps < 1) config_error("schedule_steps", "must be >= 1");
  if (unlearn_steps < 1) config_error("unlearn_steps", "must be >= 1");
  if (lemma1_trials < 0) config_error("lemma1_trials", "must be >= 0");
  if (lemma2_mc_samples < 0 || lemma2_mc_samples == 1)
    config_error("lemma2_mc_samples", "must be 0 or >= 2");
  if (!auto_learning_rate && !(finetune.learning_rate > 0.0))
    config_error("finetune.learning_rate", "must be > 0");
  if (finetune.steps < 1) config_error("finetune.steps", "must be >= 1");
  if (finetune.gradient_mode == GradientMode::Stochastic && finetune.batch_size < 1)
    config_error("finetune.batch_size", "must be >= 1");
}

AuditGrid SweepConfig::audit_grid() const {
  AuditGrid g;
  g.ambient_dims = ambient_dims;
  g.rank_c_list = rank_c_list;
  g.rank_s_list = rank_s_list;
  g.gamma_grid = gamma_grid;
  g.alpha_grid = alpha_grid;
  g.families = sigma_families;
  g.replicates = replicates;
  g.lemma1_trials = lemma1_trials;
  g.lemma2_mc_samples = lemma2_mc_samples;
  g.master_seed = master_seed;
  return g;
}

SweepConfig config_from_json(const Json& j) {
  if (!j.is_object()) config_error("<root>", "config must be a JSON object");
  SweepConfig c;
  c.ambient_dims = read_field(j, "ambient_dims", "", c.ambient_dims);
  c.rank_c_list = read_field(j, "rank_c_list", "", c.rank_c_list);
  c.rank_s_list = read_field(j, "rank_s_list", "", c.rank_s_list);
  c.gamma_grid = read_field(j, "gamma_grid", "", c.gamma_grid);
  c.alpha_grid = read_field(j, "alpha_grid", "", c.alpha_grid);
  c.sigma_families = read_enum_list(j, "sigma_families", "", c.sigma_families, sigma_family_from_string);
  c.unlearn_methods = read_enum_list(j, "unlearn_method", "", c.unlearn_methods, unlearn_method_from_string);
  c.replicates = read_field(j, "replicates", "", c.replicates);
  c.schedule_steps = read_field(j, "schedule_steps", "", c.schedule_steps);
  c.unlearn_steps = read_field(j, "unlearn_steps", "", c.unlearn_steps);
  c.lemma1_trials = read_field(j, "lemma1_trials", "", c.lemma1_trials);
  c.lemma2_mc_samples = read_field(j, "lemma2_mc_samples", "", c.lemma2_mc_samples);
  c.output_dir = read_field<std::string>(j, "output_dir", "", "");
  c.master_seed = read_field<std::uint64_t>(j, "master_seed", "", 0);
  if (j.contains("schedule_kind") && !j.at("schedule_kind").is_null()) {
    try {
      c.schedule_kind = schedule_kind_from_string(read_field<std::string>(j, "schedule_kind", "", "linear"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      config_error("schedule_kind", e.what());
    }
  }
  if (j.contains("finetune") && !j.at("finetune").is_null()) {
    const Json& f = j.at("finetune");
    if (!f.is_object()) config_error("finetune", "must be an object");
    const std::string p = "finetune.";
    if (f.contains("learning_rate") && !f.at("learning_rate").is_null()) {
      c.auto_learning_rate = false;
      c.finetune.learning_rate = read_field(f, "learning_rate", p, 0.0);
    }
    c.finetune.steps = read_field(f, "steps", p, c.finetune.steps);
    c.finetune.batch_size = read_field(f, "batch_size", p, c.finetune.batch_size);
    c.finetune.seed = read_field<std::uint64_t>(f, "seed", p, c.finetune.seed);
    try {
      c.finetune.alpha_mode = alpha_mode_from_string(read_field<std::string>(f, "alpha_mode", p, "fixed"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      config_error("finetune.alpha_mode", e.what());
    }
    try {
      c.finetune.gradient_mode =
          gradient_mode_from_string(read_field<std::string>(f, "gradient_mode", p, "exact"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      config_error("finetune.gradient_mode", e.what());
    }
  }
  c.validate();
  return c;
}

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".toml")
    throw Error(ErrorCode::ConfigError, path + ": TOML configs are not supported; use JSON");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return config_from_json(j);
}

Json to_json(const SweepConfig& c) {
  Json j;
  j["ambient_dims"] = c.ambient_dims;
  j["rank_c_list"] = c.rank_c_list;
  j["rank_s_list"] = c.rank_s_list;
  j["gamma_grid"] = c.gamma_grid;
  j["alpha_grid"] = c.alpha_grid;
  Json fams = Json::array();
  for (auto f : c.sigma_families) fams.push_back(to_string(f));
  j["sigma_families"] = fams;
  Json methods = Json::array();
  for (auto m : c.unlearn_methods) methods.push_back(to_string(m));
  j["unlearn_method"] = methods;
  Json f;
  f["learning_rate"] = c.auto_learning_rate ? Json(nullptr) : Json(c.finetune.learning_rate);
  f["steps"] = c.finetune.steps;
  f["alpha_mode"] = to_string(c.finetune.alpha_mode);
  f["gradient_mode"] = to_string(c.finetune.gradient_mode);
  f["batch_size"] = c.finetune.batch_size;
  f["seed"] = c.finetune.seed;
  j["finetune"] = f;
  j["schedule_kind"] = to_string(c.schedule_kind);
  j["schedule_steps"] = c.schedule_steps;
  j["unlearn_steps"] = c.unlearn_steps;
  j["replicates"] = c.replicates;
  j["lemma1_trials"] = c.lemma1_trials;
  j["lemma2_mc_samples"] = c.lemma2_mc_samples;
  j["output_dir"] = c.output_dir;
  j["master_seed"] = c.master_seed;
  return j;
}

void apply_seed_override(SweepConfig& config) {
  const char* env = std::getenv("RESURGENCE_LAB_SEED");
  if (env == nullptr || *env == '\0') return;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used, 0);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    config.master_seed = v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, std::string("RESURGENCE_LAB_SEED: not an unsigned integer: ") + env);
  }
}

AuditOutcome run_audit(const SweepConfig& config, int jobs) {
  config.validate();
  ensure_dir(config.output_dir);
  AuditOutcome out;
  out.result = run_bound_audit(config.audit_grid(), jobs);

  Json report;
  report["tool"] = "resurgence-lab";
  report["version"] = kVersion;
  report["master_seed"] = config.master_seed;
  report["cells"] = out.result.cells;
  report["subspace_pairs"] = out.result.subspace_pairs;
  report["max_closed_form_error"] = out.result.max_closed_form_error;
  report["gated_violations"] = out.result.gated_violations();
  Json reports = Json::array();
  for (const auto& r : out.result.reports) reports.push_back(to_json(r));
  report["reports"] = std::move(reports);
  Json by_family = Json::object();
  for (const auto& [family, reps] : out.result.by_family) {
    Json rows = Json::array();
    for (const auto& r : reps) {
      Json row = to_json(r);
      row.erase("counterexamples");
      rows.push_back(std::move(row));
    }
    by_family[to_string(family)] = std::move(rows);
  }
  report["by_sigma_family"] = std::move(by_family);
  report["config"] = to_json(config);
  out.report = report;

  const fs::path dir(config.output_dir);
  out.report_path = (dir / "audit_report.json").string();
  out.summary_path = (dir / "audit_summary.csv").string();
  write_file(out.report_path, report.dump(2) + "\n");

  std::ostringstream csv;
  csv << kCsvVersionLine << '\n'
      << "bound_id,gamma,sigma_family,trials,violations,equality_cases,min_slack,tolerance\n";
  auto row = [&](const BoundReport& r, const std::string& family) {
    csv << to_string(r.bound_id) << ',' << to_string(r.gamma) << ',' << family << ',' << r.trials << ','
        << r.violations << ',' << r.equality_cases << ','
        << (r.trials > 0 ? format_double(r.min_slack) : "") << ',' << format_double(r.tolerance)
        << '\n';
  };
  for (const auto& r : out.result.reports) row(r, "all");
  for (const auto& [family, reps] : out.result.by_family)
    for (const auto& r : reps)
      if (r.trials > 0) row(r, to_string(family));
  write_file(out.summary_path, csv.str());
  return out;
}

void print_audit_table(std::ostream& out, const AuditResult& result) {
  out << "cells: " << result.cells << "  subspace pairs: " << result.subspace_pairs
      << "  max |measured - closed form|: " << fmt_fixed(result.max_closed_form_error, 3) << "\n\n";
  out << std::left << std::setw(24) << "bound" << std::setw(12) << "gamma" << std::right
      << std::setw(10) << "trials" << std::setw(12) << "violations" << std::setw(10) << "equal"
      << std::setw(16) << "min_slack" << "\n";
  for (const auto& r : result.reports) {
    out << std::left << std::setw(24) << to_string(r.bound_id) << std::setw(12) << to_string(r.gamma)
        << std::right << std::setw(10) << r.trials << std::setw(12) << r.violations << std::setw(10)
        << r.equality_cases << std::setw(16) << (r.trials > 0 ? fmt_fixed(r.min_slack) : "-")
        << "\n";
  }
  for (const auto& [family, reps] : result.by_family) {
    out << "\nsigma family " << to_string(family) << ":\n";
    for (const auto& r : reps) {
      if (r.trials == 0) continue;
      out << "  " << std::left << std::setw(24) << to_string(r.bound_id) << std::setw(12) << to_string(r.gamma)
          << std::right << std::setw(10) << r.trials << std::setw(12) << r.violations << std::setw(10)
          << r.equality_cases << std::setw(16) << fmt_fixed(r.min_slack) << "\n";
    }
  }
  out << "\ngated violations: " << result.gated_violations() << "\n";
}

SweepInputs sweep_inputs(const SweepConfig& config, const AuditCell& cell, UnlearnMethod method) {
  CellGeometry geo = build_geometry(cell);
  Rng rng(derive_seed(cell.seed, 10));
  const int d = cell.d;
  const LinearScoreModel w0(rng.gaussian(d, d) / std::sqrt(static_cast<double>(d)));

  UnlearnResult unlearned{w0, 0.0, method};
  switch (method) {
    case UnlearnMethod::Projection:
      unlearned = project_unlearn(w0, geo.c);
      break;
    case UnlearnMethod::AnchorEdit: {
      // Concept directions map onto a blank (zero) anchor.
      std::vector<Eigen::VectorXd> concepts, anchors;
      for (int i = 0; i < geo.c.rank(); ++i) {
        concepts.push_back(geo.c.basis().col(i));
        anchors.push_back(Eigen::VectorXd::Zero(d));
      }
      unlearned = anchor_edit(w0, concepts, anchors);
      unlearned.residual_norm = concept_residual(unlearned.model, geo.c);
      break;
    }
    case UnlearnMethod::Gradient: {
      GradientUnlearnOptions opts;
      opts.steps = config.unlearn_steps;
      unlearned = gradient_unlearn(w0, geo.c, geo.dist, cell.alpha, opts);
      break;
    }
  }

  FineTuneConfig ft = config.finetune;
  ft.fixed_alpha = cell.alpha;
  ft.seed = derive_seed(config.finetune.seed, static_cast<std::uint64_t>(cell.index));
  NoiseSchedule schedule = NoiseSchedule::single(cell.alpha);
  if (ft.alpha_mode == AlphaMode::UniformOverSchedule) {
    schedule = config.schedule_kind == ScheduleKind::Cosine ? NoiseSchedule::cosine(config.schedule_steps)
                                                            : NoiseSchedule::linear(config.schedule_steps);
  }
  if (config.auto_learning_rate) {
    ft.learning_rate = ft.alpha_mode == AlphaMode::Fixed
                           ? default_learning_rate(geo.dist, {cell.alpha})
                           : default_learning_rate(geo.dist, schedule.alphas());
  }
  return {std::move(geo), unlearned.model, std::move(schedule), ft, unlearned.residual_norm};
}

SweepOutcome run_sweep(const SweepConfig& config, int jobs) {
  config.validate();
  ensure_dir(config.output_dir);
  const fs::path dir(config.output_dir);
  ensure_dir((dir / "trajectories").string());

  const std::vector<AuditCell> cells = enumerate_cells(config.audit_grid());
  const std::size_t methods = config.unlearn_methods.size();
  const std::size_t total = cells.size() * methods;

  struct Item {
    SweepRow row;
    std::string csv;
  };
  std::vector<Item> items(total);

  parallel_for(total, jobs, [&](std::size_t i) {
    const AuditCell& cell = cells[i / methods];
    const UnlearnMethod method = config.unlearn_methods[i % methods];
    Item& item = items[i];
    SweepRow& row = item.row;
    row.cell = cell;
    row.method = method;
    char name[96];
    std::snprintf(name, sizeof(name), "trajectories/cell_%06ld_%s.csv", cell.index, to_string(method).c_str());
    row.trajectory_file = name;
    try {
      SweepInputs in = sweep_inputs(config, cell, method);
      const auto& geo = in.geometry;
      row.gamma_restricted = leakage_restricted(geo.s, geo.c);
      row.gamma_literal = leakage_literal(geo.s, geo.c);
      row.lambda_max_c = lambda_max_C(geo.dist, geo.c);
      row.gradient_bound_restricted = gradient_bound(cell.alpha, row.gamma_restricted);
      row.gradient_bound_literal = gradient_bound(cell.alpha, row.gamma_literal);
      row.curvature_bound_restricted = curvature_bound(cell.alpha, row.gamma_restricted, row.lambda_max_c);
      row.curvature_bound_literal = curvature_bound(cell.alpha, row.gamma_literal, row.lambda_max_c);
      row.unlearn_residual = in.unlearn_residual;
      row.learning_rate = in.finetune.learning_rate;

      const Trajectory traj = finetune(in.start, geo.dist, geo.c, in.schedule, in.finetune);
      row.final_concept_energy = traj.records.back().concept_energy;
      row.final_signal_energy = traj.records.back().signal_energy;
      for (const auto& r : traj.records) row.max_grad_mass_c = std::max(row.max_grad_mass_c, r.grad_mass_c);
      std::ostringstream csv;
      write_trajectory_csv(csv, traj);
      item.csv = csv.str();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Diverged) throw;
      row.status = "diverged@" + std::to_string(e.index());
      const double nan = std::nan("");
      row.final_concept_energy = row.final_signal_energy = row.max_grad_mass_c = nan;
      row.trajectory_file.clear();
    }
  });

  SweepOutcome out;
  std::ostringstream summary;
  summary << kCsvVersionLine << '\n' << kSummaryHeader << '\n';
  for (auto& item : items) {
    const SweepRow& r = item.row;
    if (!item.csv.empty()) write_file(dir / r.trajectory_file, item.csv);
    summary << r.cell.index << ',' << r.cell.d << ',' << r.cell.rank_c << ',' << r.cell.rank_s << ','
            << format_double(r.cell.gamma_target) << ',' << format_double(r.gamma_restricted) << ','
            << format_double(r.gamma_literal) << ',' << format_double(r.cell.alpha) << ','
            << to_string(r.cell.family) << ',' << r.cell.replicate << ',' << to_string(r.method) << ','
            << r.status << ',' << format_double(r.unlearn_residual) << ','
            << format_double(r.learning_rate) << ',' << format_double(r.final_concept_energy) << ','
            << format_double(r.final_signal_energy) << ',' << format_double(r.max_grad_mass_c) << ','
            << format_double(r.gradient_bound_restricted) << ','
            << format_double(r.gradient_bound_literal) << ','
            << format_double(r.curvature_bound_restricted) << ','
            << format_double(r.curvature_bound_literal) << ',' << format_double(r.lambda_max_c) << ','
            << r.trajectory_file << '\n';
    out.rows.push_back(r);
  }
  out.summary_path = (dir / "sweep_summary.csv").string();
  write_file(out.summary_path, summary.str());

  Json manifest;
  manifest["tool"] = "resurgence-lab";
  manifest["version"] = kVersion;
  manifest["cells"] = cells.size();
  manifest["runs"] = total;
  manifest["config"] = to_json(config);
  write_file(dir / "sweep_manifest.json", manifest.dump(2) + "\n");
  return out;
}

// Demos ---------------------------------------------------------------------

std::vector<std::string> demo_names() { return {"equality_case", "leakage_sweep", "timestep_amplification"}; }

namespace {

Json demo_equality_case(std::ostream& out) {
  const int d = 8, rank_c = 4;
  const double alpha = 0.75;
  const Subspace c = Subspace::coordinate(d, {0, 1, 2, 3});
  const Subspace s = c;  // gamma = 1
  const DataDistribution dist = DataDistribution::identity(d);
  const CurvatureCheck k = check_curvature_sensitivity(dist, c, s, alpha, 1);
  const GradientCheck g = check_gradient_resurgence(dist, c, s, alpha, 1);

  out << "Equality case: d = " << d << ", rank_c = " << rank_c << ", Sigma = I, alpha = " << alpha
      << ", S = C (gamma = " << k.gamma_restricted << ")\n";
  out << "  gradient mass  ||P_C grad||  measured " << fmt_fixed(g.measured, 12) << "  bound "
      << fmt_fixed(g.bound_restricted, 12) << "  slack " << fmt_fixed(g.slack_restricted, 6) << "\n";
  out << "  update         ||P_C dW||    measured " << fmt_fixed(k.measured, 12) << "  bound "
      << fmt_fixed(k.bound_restricted, 12) << "  slack " << fmt_fixed(k.slack_restricted, 6)
      << (k.equality ? "  (equality)" : "") << "\n";

  Json j;
  j["scenario"] = "equality_case";
  j["d"] = d;
  j["rank_c"] = rank_c;
  j["alpha"] = alpha;
  j["gamma_restricted"] = k.gamma_restricted;
  j["lambda_max_C"] = k.lambda_max_c;
  j["gradient_measured"] = g.measured;
  j["gradient_bound"] = g.bound_restricted;
  j["update_measured"] = k.measured;
  j["update_bound"] = k.bound_restricted;
  j["slack"] = k.slack_restricted;
  j["equality"] = k.equality;
  return j;
}

Json demo_leakage_sweep(std::ostream& out) {
  const int d = 16, rank_c = 2, rank_s = 1;
  const double alpha = 0.5;
  const Subspace c = Subspace::random(d, rank_c, 7);
  const DataDistribution dist = DataDistribution::identity(d);
  out << "Leakage sweep: d = " << d << ", rank_c = " << rank_c << ", rank_s = " << rank_s
      << ", alpha = " << alpha << ", Sigma = I\n";
  out << std::setw(8) << "gamma" << std::setw(12) << "literal" << std::setw(14) << "grad_meas"
      << std::setw(14) << "grad_bound" << std::setw(14) << "upd_meas" << std::setw(14) << "upd_bound"
      << "\n";
  Json rows = Json::array();
  for (int i = 0; i <= 10; ++i) {
    const double target = i / 10.0;
    const Subspace s = subspace_with_overlap(c, target, rank_s, 100 + static_cast<std::uint64_t>(i));
    const GradientCheck g = check_gradient_resurgence(dist, c, s, alpha, 11);
    const CurvatureCheck k = check_curvature_sensitivity(dist, c, s, alpha, 11);
    out << std::setw(8) << fmt_fixed(g.gamma_restricted, 4) << std::setw(12) << fmt_fixed(g.gamma_literal, 4)
        << std::setw(14) << fmt_fixed(g.measured, 6) << std::setw(14) << fmt_fixed(g.bound_restricted, 6)
        << std::setw(14) << fmt_fixed(k.measured, 6) << std::setw(14) << fmt_fixed(k.bound_restricted, 6)
        << "\n";
    Json r;
    r["gamma_target"] = target;
    r["gamma_restricted"] = g.gamma_restricted;
    r["gamma_literal"] = g.gamma_literal;
    r["gradient_measured"] = g.measured;
    r["gradient_bound"] = g.bound_restricted;
    r["update_measured"] = k.measured;
    r["update_bound"] = k.bound_restricted;
    rows.push_back(r);
  }
  Json j;
  j["scenario"] = "leakage_sweep";
  j["d"] = d;
  j["rank_c"] = rank_c;
  j["rank_s"] = rank_s;
  j["alpha"] = alpha;
  j["rows"] = rows;
  return j;
}

Json demo_timestep_amplification(std::ostream& out) {
  const int d = 16, rank_c = 2, rank_s = 1;
  const double gamma = 0.5;
  const std::vector<double> alphas{0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0};
  const Subspace c = Subspace::random(d, rank_c, 21);
  const Subspace s = subspace_with_overlap(c, gamma, rank_s, 22);
  const DataDistribution dist = make_distribution(SigmaFamily::Free, c, s, 23);
  const double lmax = lambda_max_C(dist, c);
  out << "Timestep amplification: d = " << d << ", rank_c = " << rank_c << ", gamma = " << gamma
      << ", lambda_max_C = " << fmt_fixed(lmax, 6) << "\n";
  out << std::setw(8) << "alpha" << std::setw(14) << "grad_bound" << std::setw(14) << "grad_meas"
      << std::setw(14) << "curv_bound" << std::setw(14) << "upd_meas" << "\n";
  Json rows = Json::array();
  for (double a : alphas) {
    const GradientCheck g = check_gradient_resurgence(dist, c, s, a, 24);
    const CurvatureCheck k = check_curvature_sensitivity(dist, c, s, a, 24);
    out << std::setw(8) << a << std::setw(14) << fmt_fixed(g.bound_restricted, 6) << std::setw(14)
        << fmt_fixed(g.measured, 6) << std::setw(14) << fmt_fixed(k.bound_restricted, 6) << std::setw(14)
        << fmt_fixed(k.measured, 6) << "\n";
    Json r;
    r["alpha"] = a;
    r["gradient_bound"] = g.bound_restricted;
    r["gradient_measured"] = g.measured;
    r["curvature_bound"] = k.bound_restricted;
    r["update_measured"] = k.measured;
    rows.push_back(r);
  }
  Json j;
  j["scenario"] = "timestep_amplification";
  j["d"] = d;
  j["rank_c"] = rank_c;
  j["rank_s"] = rank_s;
  j["gamma"] = gamma;
  j["lambda_max_C"] = lmax;
  j["rows"] = rows;
  return j;
}

}  // namespace

Json run_demo(const std::string& name, const std::string& output_dir, std::ostream& out) {
  Json j;
  if (name == "equality_case") {
    j = demo_equality_case(out);
  } else if (name == "leakage_sweep") {
    j = demo_leakage_sweep(out);
  } else if (name == "timestep_amplification") {
    j = demo_timestep_amplification(out);
  } else {
    std::string valid;
    for (const auto& n : demo_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + name + "'; valid: " + valid);
  }
  ensure_dir(output_dir);
  const fs::path path = fs::path(output_dir) / ("demo_" + name + ".json");
  write_file(path, j.dump(2) + "\n");
  out << "wrote " << path.string() << "\n";
  return j;
}

}  // namespace rlab
