#pragma once

#include <vector>

#include <Eigen/Dense>

#include "egpal/gp_expert.hpp"
#include "egpal/rff.hpp"

namespace egpal {

/// Exact GP regression posterior with a cached Cholesky factor of K + noise I.
class ExactGp {
 public:
  /// Factorizes K + noise_var I, escalating diagonal jitter 1e-10, 1e-9, ..., 1e-4
  /// when the plain factorization fails. Throws NumericalError past 1e-4.
  static ExactGp fit(Eigen::MatrixXd X, Eigen::VectorXd y, const KernelSpec& spec, double noise_var);

  [[nodiscard]] Prediction predict(const Eigen::VectorXd& x) const;
  [[nodiscard]] BatchPrediction predict(const Eigen::MatrixXd& X) const;

  [[nodiscard]] double log_marginal_likelihood() const;

  /// Refit with one extra training pair appended.
  [[nodiscard]] ExactGp with_point(const Eigen::VectorXd& x, double y) const;

  [[nodiscard]] const Eigen::MatrixXd& inputs() const { return X_; }
  [[nodiscard]] const Eigen::VectorXd& labels() const { return y_; }
  [[nodiscard]] const KernelSpec& spec() const { return spec_; }
  [[nodiscard]] double noise_var() const { return noise_var_; }
  [[nodiscard]] double jitter() const { return jitter_; }
  [[nodiscard]] const Eigen::MatrixXd& cholesky() const { return chol_; }

 private:
  ExactGp() = default;

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  KernelSpec spec_;
  double noise_var_ = 0.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;   // lower triangular
  Eigen::VectorXd alpha_;  // (K + noise I)^{-1} y
};

/// Gram matrix K(A, B) of the scaled kernel.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const KernelSpec& spec);

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                               double noise_var);

struct HyperparameterGrids {
  std::vector<double> lengthscales;
  std::vector<double> magnitudes;
  std::vector<double> noise_vars;
};

/// Lengthscales 10^c for c in [lo, hi]; magnitudes {0.1,0.5,1,2,5} var(y);
/// noise {1e-4,...,1} var(y). A zero label variance is replaced by 1.
HyperparameterGrids default_hyperparameter_grids(const Eigen::VectorXd& y, int lo_exponent = -4,
                                                 int hi_exponent = 6);

struct HyperparameterFit {
  KernelSpec spec;
  double noise_var = 0.0;
  double log_marginal_likelihood = 0.0;
};

/// Grid argmax of the log marginal likelihood. Ties go to the smallest
/// lengthscale, then magnitude, then noise. Points whose factorization fails
/// are skipped; throws FitError if all fail.
HyperparameterFit fit_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const HyperparameterGrids& grids);

}  // namespace egpal
