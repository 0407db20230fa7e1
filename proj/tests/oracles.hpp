#pragma once

// Test-only reference computations. Nothing here calls into the closed-form
// gradient, curvature or eigen paths it is used to check.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace rlab::oracle {

// Central difference of f at W along every entry.
inline Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                   const Eigen::MatrixXd& w, double h = 1e-5) {
  Eigen::MatrixXd g(w.rows(), w.cols());
  Eigen::MatrixXd probe = w;
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f(probe);
      probe(i, j) = orig - h;
      const double down = f(probe);
      probe(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  return g;
}

// Second directional difference (f(W+hG) - 2 f(W) + f(W-hG)) / h^2.
inline double fd_second_directional(const std::function<double(const Eigen::MatrixXd&)>& f,
                                    const Eigen::MatrixXd& w, const Eigen::MatrixXd& g,
                                    double h = 1e-3) {
  return (f(w + h * g) - 2.0 * f(w) + f(w - h * g)) / (h * h);
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double power_iteration(const Eigen::MatrixXd& a, int iters = 20000, double tol = 1e-15) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) v(i) += 1e-3 * static_cast<double>(i % 7);
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(a * w);
    v = w;
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return lambda;
}

// Direct definition of the loss from the residual, by expanding
// E||W x - eps||^2 with E[x x^T] = St and E[eps x^T] = c I term by term.
inline double loss_by_expansion(const Eigen::MatrixXd& w, const Eigen::MatrixXd& st, double noise_coef) {
  const Eigen::Index d = w.rows();
  double quad = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) quad += w(i, a) * st(a, b) * w(i, b);
  double cross = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) cross += w(i, i) * noise_coef;
  return quad - 2.0 * cross + static_cast<double>(d);
}

}  // namespace rlab::oracle
