#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace egpal::tu {

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Eigen::VectorXd uniform_vector(Eigen::Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return uniform_matrix(n, 1, seed, lo, hi).col(0);
}

inline double normal_pdf(double y, double mean, double var) {
  return std::exp(-0.5 * (y - mean) * (y - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

/// Closed-form Bayesian linear regression posterior for prior N(0, s2 I) and
/// noise n2: Sigma = (Phi'Phi / n2 + I / s2)^{-1}, mean = Sigma Phi'y / n2.
struct BlrPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline BlrPosterior batch_blr(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, double s2, double n2) {
  const Eigen::Index k = phi.cols();
  const Eigen::MatrixXd precision =
      phi.transpose() * phi / n2 + Eigen::MatrixXd::Identity(k, k) / s2;
  BlrPosterior p;
  p.cov = precision.inverse();
  p.mean = p.cov * phi.transpose() * y / n2;
  return p;
}

}  // namespace egpal::tu
