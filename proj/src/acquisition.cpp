#include "egpal/acquisition.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "egpal/errors.hpp"

namespace egpal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_nonempty(const PoolPosterior& post) {
  if (post.size() == 0) throw ParameterError("acquisition over an empty pool");
}

}  // namespace

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::SingleGpVar:
      return "gp-var";
    case AcquisitionKind::WVar:
      return "wvar";
    case AcquisitionKind::WEnt:
      return "went";
    case AcquisitionKind::Qbc:
      return "qbc";
    case AcquisitionKind::GpmVar:
      return "gpm-var";
    case AcquisitionKind::GpmEnt:
      return "gpm-ent";
  }
  return "unknown";
}

std::optional<AcquisitionKind> parse_acquisition_kind(std::string_view name) {
  for (AcquisitionKind k : {AcquisitionKind::SingleGpVar, AcquisitionKind::WVar, AcquisitionKind::WEnt,
                            AcquisitionKind::Qbc, AcquisitionKind::GpmVar, AcquisitionKind::GpmEnt}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

const std::vector<AcquisitionKind>& ensemble_acquisition_kinds() {
  static const std::vector<AcquisitionKind> kinds = {AcquisitionKind::WVar, AcquisitionKind::WEnt,
                                                     AcquisitionKind::Qbc, AcquisitionKind::GpmVar,
                                                     AcquisitionKind::GpmEnt};
  return kinds;
}

Eigen::Index select(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw ParameterError("select over an empty score vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores(i))) throw NumericalError("NaN acquisition score at pool index " + std::to_string(i));
    if (scores(i) > scores(best)) best = i;
  }
  return best;
}

AcquisitionScores make_scores(Eigen::VectorXd scores) {
  const Eigen::Index idx = select(scores);
  return {std::move(scores), idx};
}

AcquisitionScores score_wvar(const PoolPosterior& post) {
  require_nonempty(post);
  return make_scores(post.vars * post.weights);
}

AcquisitionScores score_went(const PoolPosterior& post) {
  require_nonempty(post);
  const Eigen::MatrixXd ent =
      0.5 * (2.0 * std::numbers::pi * post.vars.array().cwiseMax(kVarianceFloor)).log().matrix();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(post.size());
  for (Eigen::Index m = 0; m < post.num_experts(); ++m) {
    if (post.weights(m) == 0.0) continue;
    s += post.weights(m) * ent.col(m);
  }
  return make_scores(std::move(s));
}

AcquisitionScores score_qbc(const PoolPosterior& post) {
  require_nonempty(post);
  const Eigen::VectorXd consensus = post.consensus();
  const Eigen::MatrixXd dev2 = (post.means.colwise() - consensus).array().square().matrix();
  return make_scores(dev2 * post.weights);
}

AcquisitionScores score_gpm_var(const PoolPosterior& post) {
  return make_scores(score_wvar(post).scores + score_qbc(post).scores);
}

double gaussian_mixture_entropy_lower_bound(const Eigen::VectorXd& log_weights, const Eigen::VectorXd& means,
                                            const Eigen::VectorXd& vars) {
  const Eigen::Index M = means.size();
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Eigen::VectorXd inner(M);
  double total = 0.0;
  for (Eigen::Index m = 0; m < M; ++m) {
    if (log_weights(m) == kNegInf) continue;
    const double vm = std::max(vars(m), kVarianceFloor);
    for (Eigen::Index k = 0; k < M; ++k) {
      if (log_weights(k) == kNegInf) {
        inner(k) = kNegInf;
        continue;
      }
      const double s = vm + std::max(vars(k), kVarianceFloor);
      const double d = means(m) - means(k);
      inner(k) = log_weights(k) - 0.5 * (log_2pi + std::log(s)) - 0.5 * d * d / s;
    }
    total -= std::exp(log_weights(m)) * log_sum_exp(inner);
  }
  return total;
}

AcquisitionScores score_gpm_ent(const PoolPosterior& post) {
  require_nonempty(post);
  Eigen::VectorXd s(post.size());
  for (Eigen::Index i = 0; i < post.size(); ++i) {
    s(i) = gaussian_mixture_entropy_lower_bound(post.log_weights, post.means.row(i).transpose(),
                                                post.vars.row(i).transpose());
  }
  return make_scores(std::move(s));
}

AcquisitionScores score(AcquisitionKind kind, const PoolPosterior& post) {
  switch (kind) {
    case AcquisitionKind::WVar:
      return score_wvar(post);
    case AcquisitionKind::WEnt:
      return score_went(post);
    case AcquisitionKind::Qbc:
      return score_qbc(post);
    case AcquisitionKind::GpmVar:
      return score_gpm_var(post);
    case AcquisitionKind::GpmEnt:
      return score_gpm_ent(post);
    case AcquisitionKind::SingleGpVar:
      break;
  }
  throw ParameterError("gp-var is not an ensemble acquisition rule");
}

AcquisitionScores score(AcquisitionKind kind, const Ensemble& ensemble, const Eigen::MatrixXd& pool) {
  if (pool.rows() == 0) throw ParameterError("acquisition over an empty pool");
  return score(kind, ensemble.posterior_pool(pool));
}

AcquisitionScores score_single_gp_var(const ExactGp& gp, const Eigen::MatrixXd& pool) {
  if (pool.rows() == 0) throw ParameterError("acquisition over an empty pool");
  return make_scores(gp.predict(pool).vars);
}

}  // namespace egpal
