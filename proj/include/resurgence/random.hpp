#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rlab {

// SplitMix64 step. Used to derive independent, reproducible substreams from a
// single 64-bit seed: derive_seed(seed, i) is a pure function of (seed, i).
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic generator: mt19937_64 seeded from a SplitMix64-mixed seed.
// Matrices are filled column-major, entry by entry, so a seed always maps to
// the same matrix regardless of how the result is later used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double normal();
  double uniform();  // [0, 1)
  std::uint64_t next_u64();
  std::size_t index(std::size_t n);  // uniform in [0, n)

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols);
  Eigen::VectorXd gaussian_vector(Eigen::Index n);
  Eigen::VectorXd unit_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rlab
