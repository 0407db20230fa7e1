#include "resurgence/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "resurgence/errors.hpp"
#include "resurgence/random.hpp"

namespace rlab {
namespace {

constexpr double kRankTol = 1e-10;
constexpr double kSignTol = 1e-14;

void canonicalize_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      if (std::abs(basis(i, j)) > kSignTol) {
        if (basis(i, j) < 0.0) basis.col(j) *= -1.0;
        break;
      }
    }
  }
}

void require_same_ambient(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim())
    throw Error(ErrorCode::AmbientMismatch,
                "ambient dimensions " + std::to_string(a.ambient_dim()) + " and " +
                    std::to_string(b.ambient_dim()) + " differ");
}

// Random orthonormal n x k matrix (k <= n).
Eigen::MatrixXd random_orthonormal(Rng& rng, Eigen::Index n, Eigen::Index k) {
  Eigen::MatrixXd g = rng.gaussian(n, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

}  // namespace

Subspace Subspace::orthonormalize(const Eigen::MatrixXd& raw) {
  const Eigen::Index d = raw.rows();
  const Eigen::Index k = raw.cols();
  if (d < 1 || k < 1)
    throw Error(ErrorCode::RankDeficient, "empty input matrix");
  if (k > d)
    throw Error(ErrorCode::RankDeficient,
                "more columns (" + std::to_string(k) + ") than rows (" + std::to_string(d) + ")");
  if (!raw.allFinite()) throw Error(ErrorCode::RankDeficient, "non-finite entries");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(raw);
  const auto& sv = svd.singularValues();
  const double largest = sv(0);
  const double smallest = sv(k - 1);
  if (!(largest > 0.0) || smallest <= kRankTol * largest)
    throw Error(ErrorCode::RankDeficient,
                "smallest singular value " + std::to_string(smallest) +
                    " is below 1e-10 x largest (" + std::to_string(largest) + ")");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  canonicalize_signs(q);
  return Subspace(std::move(q));
}

Subspace Subspace::from_basis(const Eigen::MatrixXd& basis) {
  if (basis.rows() < 1 || basis.cols() < 1 || basis.cols() > basis.rows())
    throw Error(ErrorCode::BadParam, "basis must be d x k with 1 <= k <= d");
  const Eigen::Index k = basis.cols();
  const double err =
      (basis.transpose() * basis - Eigen::MatrixXd::Identity(k, k)).norm();
  if (!(err <= 1e-10))
    throw Error(ErrorCode::BadParam,
                "basis is not orthonormal: ||B^T B - I||_F = " + std::to_string(err));
  return Subspace(basis);
}

Subspace Subspace::coordinate(int ambient_dim, const std::vector<int>& axes) {
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(ambient_dim, static_cast<Eigen::Index>(axes.size()));
  for (std::size_t j = 0; j < axes.size(); ++j) {
    if (axes[j] < 0 || axes[j] >= ambient_dim)
      throw Error(ErrorCode::BadParam, "axis index out of range");
    raw(axes[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return orthonormalize(raw);
}

Subspace Subspace::random(int ambient_dim, int rank, std::uint64_t seed) {
  if (ambient_dim < 1 || rank < 1 || rank > ambient_dim)
    throw Error(ErrorCode::BadParam, "random subspace needs 1 <= rank <= ambient_dim");
  Rng rng(seed);
  return orthonormalize(rng.gaussian(ambient_dim, rank));
}

Eigen::MatrixXd Subspace::projector() const { return basis_ * basis_.transpose(); }

Eigen::MatrixXd Subspace::complement_basis() const {
  const Eigen::Index d = basis_.rows();
  const Eigen::Index k = basis_.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis_);
  Eigen::MatrixXd full = qr.householderQ();
  Eigen::MatrixXd comp = full.rightCols(d - k);
  canonicalize_signs(comp);
  return comp;
}

OverlapProfile principal_angles(const Subspace& a, const Subspace& b) {
  require_same_ambient(a, b);
  Eigen::MatrixXd overlap = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap);
  const auto& sv = svd.singularValues();  // descending

  OverlapProfile profile;
  profile.angles.reserve(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double s = std::clamp(sv(i), 0.0, 1.0);
    profile.angles.push_back(std::acos(s));
  }
  const double smin = std::clamp(sv(sv.size() - 1), 0.0, 1.0);
  profile.cos2_min = smin * smin;
  return profile;
}

double leakage_restricted(const Subspace& s, const Subspace& c) {
  require_same_ambient(s, c);
  if (s.rank() > c.rank()) return 0.0;
  // U_S^T P_C U_S = (U_C^T U_S)^T (U_C^T U_S)
  Eigen::MatrixXd m = c.basis().transpose() * s.basis();
  Eigen::MatrixXd gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return std::clamp(eig.eigenvalues()(0), 0.0, 1.0);
}

double leakage_literal(const Subspace& s, const Subspace& c) {
  require_same_ambient(s, c);
  // P_S annihilates S-perp, so the d x d operator has a zero eigenvalue.
  if (s.rank() < s.ambient_dim()) return 0.0;
  Eigen::MatrixXd ps = s.projector();
  Eigen::MatrixXd op = ps * c.projector() * ps;
  op = 0.5 * (op + op.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op, Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues()(0), 0.0);
}

Subspace subspace_with_overlap(const Subspace& c, double target_cos2, int rank_s,
                               std::uint64_t seed) {
  const int d = c.ambient_dim();
  const int rank_c = c.rank();
  if (!(target_cos2 >= 0.0 && target_cos2 <= 1.0))
    throw Error(ErrorCode::InfeasibleOverlap, "target_cos2 must lie in [0, 1]");
  if (rank_s < 1 || rank_s > d)
    throw Error(ErrorCode::InfeasibleOverlap, "rank_s must lie in [1, d]");
  if (target_cos2 > 0.0 && rank_s > rank_c)
    throw Error(ErrorCode::InfeasibleOverlap,
                "rank_s > rank_c forces zero leakage; positive target unreachable");
  if (target_cos2 < 1.0 && rank_c == d)
    throw Error(ErrorCode::InfeasibleOverlap,
                "C is the whole space; leakage below 1 unreachable");

  Rng rng(seed);
  const Eigen::MatrixXd comp = c.complement_basis();
  const int free_dims = d - rank_c;
  Eigen::MatrixXd raw(d, rank_s);

  if (rank_s > rank_c) {
    // target == 0: take as many complement directions as fit, rest from C.
    const int m = std::min(rank_s, free_dims);
    raw.leftCols(m) = comp * random_orthonormal(rng, free_dims, m);
    if (rank_s > m) raw.rightCols(rank_s - m) = c.basis() * random_orthonormal(rng, rank_c, rank_s - m);
    return Subspace::orthonormalize(raw);
  }

  Eigen::MatrixXd in_c = c.basis() * random_orthonormal(rng, rank_c, rank_s);
  raw = in_c;
  if (target_cos2 < 1.0) {
    const int m = std::min(rank_s, free_dims);
    Eigen::MatrixXd out_c = comp * random_orthonormal(rng, free_dims, m);
    const double cos_t = std::sqrt(target_cos2);
    const double sin_t = std::sqrt(1.0 - target_cos2);
    raw.leftCols(m) = cos_t * in_c.leftCols(m) + sin_t * out_c;
  }
  return Subspace::orthonormalize(raw);
}

}  // namespace rlab
