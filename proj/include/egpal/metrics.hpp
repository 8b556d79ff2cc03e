#pragma once

#include <Eigen/Dense>

#include "egpal/egp.hpp"
#include "egpal/exact_gp.hpp"

namespace egpal {

struct IterationMetrics {
  int t = 0;
  double nmse = 0.0;
  double npll = 0.0;
  double wall_ms = 0.0;
};

/// Mean squared deviation of y from its mean.
double label_variance(const Eigen::VectorXd& y);

/// Mean squared residual divided by sigma2_y. Throws MetricError if
/// sigma2_y <= 0 or the lengths differ.
double nmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels, double sigma2_y);

/// -sum_i log sum_m w_m N(y_i; means(i, m), s2(i, m)), evaluated in the log domain.
/// s2 is the full predictive variance (noise included).
double npll_mixture(const Eigen::VectorXd& log_weights, const Eigen::MatrixXd& means, const Eigen::MatrixXd& s2,
                    const Eigen::VectorXd& labels);

/// Factorized negative predictive log-likelihood of the test labels.
double npll(const Ensemble& ensemble, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y);
double npll(const ExactGp& gp, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y);

}  // namespace egpal
