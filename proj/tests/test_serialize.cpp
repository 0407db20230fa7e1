#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"
#include "resurgence/serialize.hpp"

using namespace rlab;

TEST(Serialize, MatrixRoundTripIsExact) {
  Rng rng(1);
  const Eigen::MatrixXd m = rng.gaussian(3, 5);
  const Json j = matrix_to_json(m);
  ASSERT_EQ(j.size(), 3u);
  ASSERT_EQ(j[0].size(), 5u);
  EXPECT_EQ(j[1][2].get<double>(), m(1, 2));
  EXPECT_EQ(matrix_from_json(Json::parse(j.dump())), m);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1,2],[3]]")), Error);
  EXPECT_THROW(matrix_from_json(Json::parse("\"x\"")), Error);
}

TEST(Serialize, ObjectsRoundTrip) {
  const Subspace s = Subspace::random(7, 3, 2);
  EXPECT_EQ(subspace_from_json(Json::parse(to_json(s).dump())).basis(), s.basis());

  Rng rng(3);
  const LinearScoreModel m(rng.gaussian(4, 4));
  EXPECT_EQ(model_from_json(Json::parse(to_json(m).dump())).weights(), m.weights());

  const Eigen::MatrixXd g = rng.gaussian(4, 4);
  const DataDistribution d(g * g.transpose());
  EXPECT_LE((distribution_from_json(Json::parse(to_json(d).dump())).covariance() - d.covariance()).norm(), 1e-15);

  const NoiseSchedule sch = NoiseSchedule::cosine(12);
  const NoiseSchedule back = schedule_from_json(Json::parse(to_json(sch).dump()));
  EXPECT_EQ(back.kind(), sch.kind());
  EXPECT_EQ(back.alphas(), sch.alphas());
}

TEST(Serialize, SubspaceRevalidates) {
  Json j = to_json(Subspace::random(4, 2, 5));
  Eigen::MatrixXd b = matrix_from_json(j["basis"]);
  b(0, 0) += 1e-3;
  j["basis"] = matrix_to_json(b);
  try {
    subspace_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadParam);
  }
}

TEST(Serialize, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, static_cast<int>(rng.index(40)) - 20);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Serialize, TrajectoryCsvRoundTrip) {
  Trajectory t;
  Rng rng(7);
  for (int k = 0; k < 25; ++k) {
    TrajectoryRecord r;
    r.step = k;
    r.alpha = rng.uniform();
    r.loss = rng.normal();
    r.concept_energy = rng.uniform();
    r.signal_energy = rng.uniform();
    r.grad_mass_c = rng.uniform();
    r.update_norm = k == 0 ? 0.0 : rng.uniform();
    t.records.push_back(r);
  }
  std::stringstream ss;
  write_trajectory_csv(ss, t);
  std::string first, second;
  std::getline(ss, first);
  std::getline(ss, second);
  EXPECT_EQ(first, kCsvVersionLine);
  EXPECT_EQ(second, kTrajectoryHeader);
  ss.clear();
  ss.seekg(0);
  const auto back = read_trajectory_csv(ss);
  ASSERT_EQ(back.size(), t.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].step, t.records[i].step);
    EXPECT_EQ(back[i].alpha, t.records[i].alpha);
    EXPECT_EQ(back[i].loss, t.records[i].loss);
    EXPECT_EQ(back[i].concept_energy, t.records[i].concept_energy);
    EXPECT_EQ(back[i].signal_energy, t.records[i].signal_energy);
    EXPECT_EQ(back[i].grad_mass_c, t.records[i].grad_mass_c);
    EXPECT_EQ(back[i].update_norm, t.records[i].update_norm);
  }
}

TEST(Serialize, MalformedCsvIsRejected) {
  std::stringstream bad_header("# resurgence-lab v1\nstep,loss\n0,1\n");
  EXPECT_THROW(read_trajectory_csv(bad_header), Error);
  std::stringstream short_row(std::string(kCsvVersionLine) + "\n" + kTrajectoryHeader + "\n0,1,2\n");
  EXPECT_THROW(read_trajectory_csv(short_row), Error);
}

TEST(Serialize, BoundReportJson) {
  BoundReport r(BoundId::Lemma1Stated, GammaVariant::Restricted, 1e-9);
  AuditInstance a;
  a.seed = 42;
  a.trial = 3;
  a.d = 4;
  a.measured = 0.1;
  a.bound = 0.5;
  a.slack = -0.4;
  r.record(a, [](AuditInstance& i) { i.matrices["x"] = Eigen::MatrixXd::Identity(2, 2); });
  const Json j = to_json(r);
  EXPECT_EQ(j["bound_id"], "lemma1_stated");
  EXPECT_EQ(j["gamma_variant"], "restricted");
  EXPECT_EQ(j["violations"], 1);
  ASSERT_EQ(j["counterexamples"].size(), 1u);
  EXPECT_EQ(j["counterexamples"][0]["seed"], 42u);
  EXPECT_EQ(matrix_from_json(j["counterexamples"][0]["matrices"]["x"]), Eigen::MatrixXd::Identity(2, 2));
}
