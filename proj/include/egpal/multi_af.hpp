#pragma once

#include <vector>

#include <Eigen/Dense>

#include "egpal/acquisition.hpp"
#include "egpal/egp.hpp"

namespace egpal {

/// Exponential-weights portfolio over ensemble acquisition rules.
struct AfEnsembleState {
  std::vector<AcquisitionKind> kinds;
  Eigen::VectorXd log_omega;
  double eta = 1.0;

  /// Uniform weights 1/K. Kinds must be non-empty ensemble rules; eta >= 0.
  static AfEnsembleState init(std::vector<AcquisitionKind> kinds, double eta);

  [[nodiscard]] std::size_t size() const { return kinds.size(); }
  [[nodiscard]] Eigen::VectorXd weights() const { return exp_weights(log_omega); }
};

/// One score vector per rule, aligned with afs.kinds.
std::vector<AcquisitionScores> score_all(const AfEnsembleState& afs, const PoolPosterior& post);

/// Argmax pool index of every rule; duplicates across rules are allowed.
std::vector<Eigen::Index> candidate_points(const std::vector<AcquisitionScores>& scores);
std::vector<Eigen::Index> candidate_points(const Ensemble& ensemble, const AfEnsembleState& afs,
                                           const Eigen::MatrixXd& pool);

/// Ensemble predictive mean at x, used as a stand-in label.
double pseudo_label(const Ensemble& ensemble, const Eigen::VectorXd& x);

/// Validation mean squared error of a copy of `ensemble` updated with the
/// pseudo pair. `ensemble` itself is not modified.
double rollout_and_score(const Ensemble& ensemble, const Eigen::VectorXd& x, double y,
                         const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y);

/// log omega_k <- log omega_k - eta * err_k, renormalized.
AfEnsembleState update_weights(const AfEnsembleState& afs, const Eigen::VectorXd& errors);

/// (s - min) / (max - min); a constant vector maps to zeros.
Eigen::VectorXd normalize_scores(const Eigen::VectorXd& s);

/// argmax_x sum_k omega_k normalized(score_k)(x), lowest-index tie-break.
Eigen::Index combined_select(const std::vector<AcquisitionScores>& scores, const Eigen::VectorXd& omega);

struct MultiAfStepRecord {
  Eigen::VectorXd omega;  // weights after this step's update
  std::vector<Eigen::Index> candidates;
  Eigen::VectorXd validation_errors;
  Eigen::Index chosen = 0;
};

/// Candidate selection, pseudo-label rollouts, weight update and combined
/// selection for one iteration. Updates `afs`; leaves `ensemble` untouched.
MultiAfStepRecord multi_af_step(const Ensemble& ensemble, AfEnsembleState& afs, const Eigen::MatrixXd& pool,
                                const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y);

}  // namespace egpal
