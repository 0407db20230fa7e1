#include "resurgence/random.hpp"

#include <cmath>

namespace rlab {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state = a ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  splitmix64(state);
  return splitmix64(state);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t state = seed;
  engine_.seed(splitmix64(state));
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return uniform_(engine_); }

std::uint64_t Rng::next_u64() { return engine_(); }

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

Eigen::MatrixXd Rng::gaussian(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Eigen::VectorXd Rng::gaussian_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Eigen::VectorXd Rng::unit_vector(Eigen::Index n) {
  Eigen::VectorXd v = gaussian_vector(n);
  double norm = v.norm();
  while (norm == 0.0) {
    v = gaussian_vector(n);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace rlab
