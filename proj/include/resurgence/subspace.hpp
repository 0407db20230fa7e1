#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace rlab {

// A k-dimensional linear subspace of R^d, held as a d x k matrix with
// orthonormal columns. The first nonzero entry of every basis column is
// nonnegative, so equal inputs give bit-equal bases.
class Subspace {
 public:
  // Orthonormalizes the columns of `raw` (thin Householder QR). Throws
  // RankDeficient when the smallest singular value is <= 1e-10 * largest.
  static Subspace orthonormalize(const Eigen::MatrixXd& raw);

  // Adopts an already orthonormal basis; throws BadParam if
  // ||B^T B - I||_F > 1e-10. Used when deserializing.
  static Subspace from_basis(const Eigen::MatrixXd& basis);

  // span{e_i : i in axes} in R^d.
  static Subspace coordinate(int ambient_dim, const std::vector<int>& axes);

  // Uniformly random k-dimensional subspace (Gaussian matrix, orthonormalized).
  static Subspace random(int ambient_dim, int rank, std::uint64_t seed);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int rank() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }

  // P = B B^T.
  Eigen::MatrixXd projector() const;

  // Orthonormal basis of the orthogonal complement; d x (d - k). Empty
  // (d x 0) when the subspace is the whole space.
  Eigen::MatrixXd complement_basis() const;

 private:
  explicit Subspace(Eigen::MatrixXd basis) : basis_(std::move(basis)) {}
  Eigen::MatrixXd basis_;
};

struct OverlapProfile {
  std::vector<double> angles;  // ascending, each in [0, pi/2]
  double cos2_min = 1.0;       // cos^2 of the largest angle
};

OverlapProfile principal_angles(const Subspace& a, const Subspace& b);

// lambda_min(U_S^T P_C U_S): the leakage of S into C measured on S itself.
// Equals cos^2 of the largest principal angle when rank_s <= rank_c, and 0
// otherwise.
double leakage_restricted(const Subspace& s, const Subspace& c);

// lambda_min(P_S P_C P_S) over all of R^d. Zero whenever rank_s < d.
double leakage_literal(const Subspace& s, const Subspace& c);

// Builds S with leakage_restricted(S, c) == target_cos2. Basis vectors of c
// (randomly rotated within c) are tilted toward the complement of c by
// arccos(sqrt(target_cos2)). Throws InfeasibleOverlap when no such S exists.
Subspace subspace_with_overlap(const Subspace& c, double target_cos2, int rank_s,
                               std::uint64_t seed);

}  // namespace rlab
