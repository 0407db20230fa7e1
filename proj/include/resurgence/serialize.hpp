#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "resurgence/audit.hpp"
#include "resurgence/diffusion.hpp"
#include "resurgence/finetune.hpp"
#include "resurgence/subspace.hpp"
#include "resurgence/unlearn.hpp"

namespace rlab {

using Json = nlohmann::ordered_json;

// Matrices are row-major arrays of arrays.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json to_json(const Subspace& s);
Subspace subspace_from_json(const Json& j);  // re-validates orthonormality

Json to_json(const LinearScoreModel& m);
LinearScoreModel model_from_json(const Json& j);

Json to_json(const DataDistribution& d);
DataDistribution distribution_from_json(const Json& j);

Json to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const Json& j);

Json to_json(const UnlearnResult& r);

Json to_json(const TrajectoryRecord& r);
Json to_json(const Trajectory& t);  // records plus retained checkpoints

Json to_json(const AuditInstance& inst);
Json to_json(const BoundReport& r);

inline constexpr const char* kCsvVersionLine = "# resurgence-lab v1";
inline constexpr const char* kTrajectoryHeader =
    "step,alpha,loss,concept_energy,signal_energy,grad_mass_C,update_norm";

// Shortest round-trip decimal form ("%.17g"); "nan"/"inf" for non-finite.
std::string format_double(double x);

void write_trajectory_csv(std::ostream& out, const Trajectory& t);
// Parses CSV written by write_trajectory_csv.
std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in);

}  // namespace rlab
