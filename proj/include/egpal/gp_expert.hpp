#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "egpal/rff.hpp"

namespace egpal {

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
};

struct BatchPrediction {
  Eigen::VectorXd means;
  Eigen::VectorXd vars;
};

struct PredictiveLikelihood {
  double density = 0.0;
  double log_density = 0.0;
  double y_hat = 0.0;
  double s2 = 0.0;  // function variance plus noise variance
};

/// One random-feature GP expert: Bayesian linear regression on phi(x) with
/// prior theta ~ N(0, sigma2_theta I) and Gaussian observation noise.
/// The posterior N(theta_hat, Sigma) is propagated by rank-1 updates.
class GpExpert {
 public:
  GpExpert(SpectralFeatures features, double sigma2_theta, double noise_var);

  [[nodiscard]] const SpectralFeatures& features() const { return features_; }
  [[nodiscard]] const Eigen::VectorXd& theta_hat() const { return theta_hat_; }
  [[nodiscard]] const Eigen::MatrixXd& sigma() const { return sigma_; }
  [[nodiscard]] double sigma2_theta() const { return sigma2_theta_; }
  [[nodiscard]] double noise_var() const { return noise_var_; }

  /// Function posterior at x; var excludes observation noise and is clamped at 0.
  [[nodiscard]] Prediction predict(const Eigen::VectorXd& x) const;
  [[nodiscard]] BatchPrediction predict(const Eigen::MatrixXd& X) const;

  /// Posterior predictive of a noisy label y at x.
  [[nodiscard]] PredictiveLikelihood predictive_likelihood(const Eigen::VectorXd& x, double y) const;

  void update(const Eigen::VectorXd& x, double y);

  /// Binary checkpoint: magic, version, D, d, frequencies (row-major),
  /// theta_hat, Sigma (row-major), sigma2_theta, noise_var. Host byte order.
  void write(std::ostream& out) const;
  static GpExpert read(std::istream& in);

  friend bool operator==(const GpExpert& a, const GpExpert& b);

 private:
  GpExpert(SpectralFeatures features, Eigen::VectorXd theta_hat, Eigen::MatrixXd sigma, double sigma2_theta,
           double noise_var);

  SpectralFeatures features_;
  Eigen::VectorXd theta_hat_;
  Eigen::MatrixXd sigma_;
  double sigma2_theta_;
  double noise_var_;
};

}  // namespace egpal
