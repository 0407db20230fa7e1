#include "resurgence/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "resurgence/errors.hpp"

namespace rlab {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::BadParam, "matrix must be a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw Error(ErrorCode::BadParam, "ragged matrix rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw Error(ErrorCode::BadParam, "matrix entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Json to_json(const Subspace& s) {
  Json j;
  j["ambient_dim"] = s.ambient_dim();
  j["rank"] = s.rank();
  j["basis"] = matrix_to_json(s.basis());
  return j;
}

Subspace subspace_from_json(const Json& j) {
  const Eigen::MatrixXd basis = matrix_from_json(j.at("basis"));
  if (j.at("ambient_dim").get<int>() != basis.rows() || j.at("rank").get<int>() != basis.cols())
    throw Error(ErrorCode::BadParam, "subspace ambient_dim/rank disagree with basis shape");
  return Subspace::from_basis(basis);
}

Json to_json(const LinearScoreModel& m) {
  Json j;
  j["weights"] = matrix_to_json(m.weights());
  return j;
}

LinearScoreModel model_from_json(const Json& j) {
  return LinearScoreModel(matrix_from_json(j.at("weights")));
}

Json to_json(const DataDistribution& d) {
  Json j;
  j["covariance"] = matrix_to_json(d.covariance());
  return j;
}

DataDistribution distribution_from_json(const Json& j) {
  return DataDistribution(matrix_from_json(j.at("covariance")));
}

Json to_json(const NoiseSchedule& s) {
  Json j;
  j["kind"] = to_string(s.kind());
  j["num_steps"] = s.num_steps();
  j["alphas"] = s.alphas();
  return j;
}

NoiseSchedule schedule_from_json(const Json& j) {
  auto alphas = j.at("alphas").get<std::vector<double>>();
  if (j.at("num_steps").get<int>() != static_cast<int>(alphas.size()))
    throw Error(ErrorCode::BadParam, "schedule num_steps disagrees with alphas");
  return NoiseSchedule::from_alphas(schedule_kind_from_string(j.at("kind").get<std::string>()),
                                    std::move(alphas));
}

Json to_json(const UnlearnResult& r) {
  Json j;
  j["method"] = to_string(r.method);
  j["residual_norm"] = r.residual_norm;
  j["weights"] = matrix_to_json(r.model.weights());
  return j;
}

Json to_json(const TrajectoryRecord& r) {
  Json j;
  j["step"] = r.step;
  j["alpha"] = r.alpha;
  j["loss"] = r.loss;
  j["concept_energy"] = r.concept_energy;
  j["signal_energy"] = r.signal_energy;
  j["grad_mass_C"] = r.grad_mass_c;
  j["update_norm"] = r.update_norm;
  return j;
}

Json to_json(const Trajectory& t) {
  Json j;
  Json records = Json::array();
  for (const auto& r : t.records) records.push_back(to_json(r));
  Json checkpoints = Json::array();
  for (const auto& c : t.checkpoints) {
    Json cp;
    cp["step"] = c.step;
    cp["weights"] = matrix_to_json(c.weights);
    checkpoints.push_back(std::move(cp));
  }
  j["records"] = std::move(records);
  j["checkpoints"] = std::move(checkpoints);
  return j;
}

Json to_json(const AuditInstance& inst) {
  Json j;
  j["seed"] = inst.seed;
  if (inst.trial >= 0) j["trial"] = inst.trial;
  j["d"] = inst.d;
  j["rank_c"] = inst.rank_c;
  j["rank_s"] = inst.rank_s;
  j["alpha"] = inst.alpha;
  j["gamma_target"] = inst.gamma_target;
  j["gamma_restricted"] = inst.gamma_restricted;
  j["gamma_literal"] = inst.gamma_literal;
  j["sigma_family"] = to_string(inst.family);
  j["measured"] = inst.measured;
  j["bound"] = inst.bound;
  j["slack"] = inst.slack;
  if (!inst.matrices.empty()) {
    Json m;
    for (const auto& [name, mat] : inst.matrices) m[name] = matrix_to_json(mat);
    j["matrices"] = std::move(m);
  }
  return j;
}

Json to_json(const BoundReport& r) {
  Json j;
  j["bound_id"] = to_string(r.bound_id);
  j["gamma_variant"] = to_string(r.gamma);
  j["trials"] = r.trials;
  j["violations"] = r.violations;
  j["equality_cases"] = r.equality_cases;
  j["min_slack"] = r.trials > 0 ? Json(r.min_slack) : Json(nullptr);
  j["tolerance"] = r.tolerance;
  j["worst_instance"] = r.trials > 0 ? to_json(r.worst_instance) : Json(nullptr);
  Json ces = Json::array();
  for (const auto& ce : r.counterexamples) ces.push_back(to_json(ce));
  j["counterexamples"] = std::move(ces);
  return j;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << kCsvVersionLine << '\n' << kTrajectoryHeader << '\n';
  for (const auto& r : t.records) {
    out << r.step << ',' << format_double(r.alpha) << ',' << format_double(r.loss) << ','
        << format_double(r.concept_energy) << ',' << format_double(r.signal_energy) << ','
        << format_double(r.grad_mass_c) << ',' << format_double(r.update_norm) << '\n';
  }
}

std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kTrajectoryHeader) throw Error(ErrorCode::BadParam, "unexpected trajectory header: " + line);
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw Error(ErrorCode::BadParam, "trajectory row needs 7 fields");
    TrajectoryRecord r;
    r.step = std::stoi(fields[0]);
    r.alpha = std::stod(fields[1]);
    r.loss = std::stod(fields[2]);
    r.concept_energy = std::stod(fields[3]);
    r.signal_energy = std::stod(fields[4]);
    r.grad_mass_c = std::stod(fields[5]);
    r.update_norm = std::stod(fields[6]);
    out.push_back(r);
  }
  return out;
}

}  // namespace rlab
