#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "egpal/egp.hpp"
#include "egpal/exact_gp.hpp"

namespace egpal {

enum class AcquisitionKind { SingleGpVar, WVar, WEnt, Qbc, GpmVar, GpmEnt };

/// Short names: gp-var, wvar, went, qbc, gpm-var, gpm-ent.
std::string to_string(AcquisitionKind kind);
std::optional<AcquisitionKind> parse_acquisition_kind(std::string_view name);

/// The five ensemble-based rules, in canonical order.
const std::vector<AcquisitionKind>& ensemble_acquisition_kinds();

/// Variances are floored at this value before any logarithm.
inline constexpr double kVarianceFloor = 1e-12;

struct AcquisitionScores {
  Eigen::VectorXd scores;
  Eigen::Index argmax_index = 0;
};

/// Argmax with lowest-index tie-break. Throws ParameterError on an empty
/// vector and NumericalError on NaN.
Eigen::Index select(const Eigen::VectorXd& scores);

AcquisitionScores make_scores(Eigen::VectorXd scores);

// Scores over a precomputed pool posterior. The pool must be non-empty.
AcquisitionScores score_wvar(const PoolPosterior& post);
AcquisitionScores score_went(const PoolPosterior& post);
AcquisitionScores score_qbc(const PoolPosterior& post);
AcquisitionScores score_gpm_var(const PoolPosterior& post);
AcquisitionScores score_gpm_ent(const PoolPosterior& post);

/// Dispatch on an ensemble rule. SingleGpVar is rejected here.
AcquisitionScores score(AcquisitionKind kind, const PoolPosterior& post);
AcquisitionScores score(AcquisitionKind kind, const Ensemble& ensemble, const Eigen::MatrixXd& pool);

/// Baseline: exact GP posterior variance.
AcquisitionScores score_single_gp_var(const ExactGp& gp, const Eigen::MatrixXd& pool);

/// Lower bound on the entropy of a 1-D Gaussian mixture:
/// -sum_m w_m log sum_m' w_m' N(mu_m; mu_m', v_m + v_m').
double gaussian_mixture_entropy_lower_bound(const Eigen::VectorXd& log_weights, const Eigen::VectorXd& means,
                                            const Eigen::VectorXd& vars);

}  // namespace egpal
