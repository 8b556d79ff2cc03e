#include "egpal/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "egpal/acquisition.hpp"
#include "egpal/errors.hpp"

namespace egpal {

double label_variance(const Eigen::VectorXd& y) {
  if (y.size() == 0) throw MetricError("label variance of an empty set");
  return (y.array() - y.mean()).square().mean();
}

double nmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels, double sigma2_y) {
  if (predictions.size() != labels.size()) throw MetricError("nmse: prediction and label counts differ");
  if (labels.size() == 0) throw MetricError("nmse over an empty test set");
  if (!(sigma2_y > 0.0) || !std::isfinite(sigma2_y)) throw MetricError("nmse: test label variance must be > 0");
  return (predictions - labels).squaredNorm() / static_cast<double>(labels.size()) / sigma2_y;
}

double npll_mixture(const Eigen::VectorXd& log_weights, const Eigen::MatrixXd& means, const Eigen::MatrixXd& s2,
                    const Eigen::VectorXd& labels) {
  if (means.rows() != labels.size() || s2.rows() != labels.size() || means.cols() != log_weights.size() ||
      s2.cols() != log_weights.size()) {
    throw MetricError("npll: inconsistent shapes");
  }
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Eigen::VectorXd terms(log_weights.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    for (Eigen::Index m = 0; m < log_weights.size(); ++m) {
      const double v = std::max(s2(i, m), kVarianceFloor);
      const double r = labels(i) - means(i, m);
      terms(m) = log_weights(m) - 0.5 * (log_2pi + std::log(v)) - 0.5 * r * r / v;
    }
    total -= log_sum_exp(terms);
  }
  return total;
}

double npll(const Ensemble& ensemble, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y) {
  const PoolPosterior post = ensemble.posterior_pool(test_x);
  const Eigen::MatrixXd s2 = (post.vars.array() + ensemble.noise_var()).matrix();
  return npll_mixture(post.log_weights, post.means, s2, test_y);
}

double npll(const ExactGp& gp, const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y) {
  const BatchPrediction p = gp.predict(test_x);
  const Eigen::MatrixXd s2 = (p.vars.array() + gp.noise_var()).matrix();
  return npll_mixture(Eigen::VectorXd::Zero(1), p.means, s2, test_y);
}

}  // namespace egpal
