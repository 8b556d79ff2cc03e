#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "egpal/gp_expert.hpp"
#include "egpal/rff.hpp"

namespace egpal {

/// Elementwise std::exp. Eigen's vectorized exp clamps very negative inputs to
/// a denormal instead of 0, which would make underflowed weights depend on
/// their position in the vector.
Eigen::VectorXd exp_weights(const Eigen::VectorXd& log_w);

/// Per-expert function posterior at a single input.
struct MixturePrediction {
  Eigen::VectorXd means;
  Eigen::VectorXd vars;
  Eigen::VectorXd weights;
  double consensus_mean = 0.0;

  /// Law of total variance over the mixture components.
  [[nodiscard]] double mixture_variance() const;
};

/// Per-expert function posterior over a pool of inputs. Row i is pool point i,
/// column m is expert m.
struct PoolPosterior {
  Eigen::MatrixXd means;
  Eigen::MatrixXd vars;
  Eigen::VectorXd weights;
  Eigen::VectorXd log_weights;

  /// Builds a posterior from explicit per-expert moments; log_weights = log(weights).
  static PoolPosterior from_moments(Eigen::MatrixXd means, Eigen::MatrixXd vars, Eigen::VectorXd weights);

  [[nodiscard]] Eigen::Index size() const { return means.rows(); }
  [[nodiscard]] Eigen::Index num_experts() const { return means.cols(); }
  [[nodiscard]] Eigen::VectorXd consensus() const { return means * weights; }
};

/// Weighted ensemble of random-feature GP experts. The weights are the
/// posterior model probabilities, kept in the log domain.
class Ensemble {
 public:
  /// Experts start at their priors with uniform weights. All experts share one
  /// draw of standard normals (scaled per lengthscale) from `seed`.
  static Ensemble init(std::span<const KernelSpec> dictionary, int num_features, int dim, double noise_var,
                       std::uint64_t seed);

  [[nodiscard]] std::size_t size() const { return experts_.size(); }
  [[nodiscard]] int dim() const { return experts_.front().features().dim(); }
  [[nodiscard]] double noise_var() const { return experts_.front().noise_var(); }
  [[nodiscard]] const std::vector<GpExpert>& experts() const { return experts_; }
  [[nodiscard]] const std::vector<KernelSpec>& kernel_specs() const { return specs_; }
  [[nodiscard]] const Eigen::VectorXd& log_weights() const { return log_weights_; }
  [[nodiscard]] Eigen::VectorXd weights() const { return exp_weights(log_weights_); }

  [[nodiscard]] MixturePrediction posterior_mixture(const Eigen::VectorXd& x) const;
  [[nodiscard]] PoolPosterior posterior_pool(const Eigen::MatrixXd& X) const;

  /// Weighted mean of the expert means at x.
  [[nodiscard]] double consensus_mean(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd consensus_mean(const Eigen::MatrixXd& X) const;

  /// Log of the mixture predictive density sum_m w_m N(y; y_hat_m, s2_m) of a noisy label.
  [[nodiscard]] double log_predictive_density(const Eigen::VectorXd& x, double y) const;

  /// Bayes update of the model weights followed by the rank-1 update of every
  /// expert with the same labelled pair.
  void update(const Eigen::VectorXd& x, double y);

  /// Copy of this ensemble after update(x, y).
  [[nodiscard]] Ensemble updated(const Eigen::VectorXd& x, double y) const;

  /// Versioned checkpoint: header, M, kernel specs, expert states, log-weights.
  void write(std::ostream& out) const;
  static Ensemble read(std::istream& in);

  friend bool operator==(const Ensemble& a, const Ensemble& b);

 private:
  Ensemble(std::vector<GpExpert> experts, std::vector<KernelSpec> specs, Eigen::VectorXd log_weights);

  std::vector<GpExpert> experts_;
  std::vector<KernelSpec> specs_;
  Eigen::VectorXd log_weights_;
};

/// log(sum(exp(v))) ignoring -inf entries; returns -inf when all are -inf.
double log_sum_exp(const Eigen::VectorXd& v);

/// Subtracts log_sum_exp so that exp(v) sums to one. Throws NumericalError if
/// every entry is -inf or any entry is NaN.
Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& v);

}  // namespace egpal
