#include "egpal/multi_af.hpp"

#include <cmath>

#include "egpal/errors.hpp"

namespace egpal {

AfEnsembleState AfEnsembleState::init(std::vector<AcquisitionKind> kinds, double eta) {
  if (kinds.empty()) throw ParameterError("acquisition portfolio must be non-empty");
  for (AcquisitionKind k : kinds) {
    if (k == AcquisitionKind::SingleGpVar) throw ParameterError("gp-var cannot join the acquisition portfolio");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ParameterError("learning rate eta must be finite and >= 0");
  AfEnsembleState s;
  const auto K = static_cast<Eigen::Index>(kinds.size());
  s.kinds = std::move(kinds);
  s.log_omega = Eigen::VectorXd::Constant(K, -std::log(static_cast<double>(K)));
  s.eta = eta;
  return s;
}

std::vector<AcquisitionScores> score_all(const AfEnsembleState& afs, const PoolPosterior& post) {
  std::vector<AcquisitionScores> out;
  out.reserve(afs.kinds.size());
  for (AcquisitionKind k : afs.kinds) out.push_back(score(k, post));
  return out;
}

std::vector<Eigen::Index> candidate_points(const std::vector<AcquisitionScores>& scores) {
  std::vector<Eigen::Index> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s.argmax_index);
  return out;
}

std::vector<Eigen::Index> candidate_points(const Ensemble& ensemble, const AfEnsembleState& afs,
                                           const Eigen::MatrixXd& pool) {
  if (pool.rows() == 0) throw ParameterError("candidate selection over an empty pool");
  return candidate_points(score_all(afs, ensemble.posterior_pool(pool)));
}

double pseudo_label(const Ensemble& ensemble, const Eigen::VectorXd& x) { return ensemble.consensus_mean(x); }

double rollout_and_score(const Ensemble& ensemble, const Eigen::VectorXd& x, double y,
                         const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y) {
  if (val_x.rows() == 0) throw ParameterError("validation set must be non-empty");
  if (val_x.rows() != val_y.size()) throw ParameterError("validation inputs and labels differ in length");
  const Ensemble rolled = ensemble.updated(x, y);
  const Eigen::VectorXd pred = rolled.consensus_mean(val_x);
  return (val_y - pred).squaredNorm() / static_cast<double>(val_y.size());
}

AfEnsembleState update_weights(const AfEnsembleState& afs, const Eigen::VectorXd& errors) {
  if (errors.size() != afs.log_omega.size()) throw ParameterError("one validation error per rule required");
  if (!errors.allFinite()) throw NumericalError("non-finite validation error");
  AfEnsembleState next = afs;
  // Shifting by the smallest error leaves the weights unchanged and keeps
  // eta * err from swamping the log-weights in floating point.
  const double floor = errors.minCoeff();
  next.log_omega = normalize_log_weights(afs.log_omega - afs.eta * (errors.array() - floor).matrix());
  return next;
}

Eigen::VectorXd normalize_scores(const Eigen::VectorXd& s) {
  if (s.size() == 0) return s;
  const double lo = s.minCoeff();
  const double hi = s.maxCoeff();
  const double span = hi - lo;
  if (!(span > 0.0)) return Eigen::VectorXd::Zero(s.size());
  return ((s.array() - lo) / span).matrix();
}

Eigen::Index combined_select(const std::vector<AcquisitionScores>& scores, const Eigen::VectorXd& omega) {
  if (scores.empty()) throw ParameterError("combined selection needs at least one rule");
  if (static_cast<Eigen::Index>(scores.size()) != omega.size()) {
    throw ParameterError("one weight per rule required");
  }
  const Eigen::Index n = scores.front().scores.size();
  Eigen::VectorXd combined = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k].scores.size() != n) throw ParameterError("score vectors differ in length");
    const double w = omega(static_cast<Eigen::Index>(k));
    if (w == 0.0) continue;
    combined += w * normalize_scores(scores[k].scores);
  }
  return select(combined);
}

MultiAfStepRecord multi_af_step(const Ensemble& ensemble, AfEnsembleState& afs, const Eigen::MatrixXd& pool,
                                const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y) {
  if (pool.rows() == 0) throw ParameterError("multi-rule step over an empty pool");
  if (val_x.rows() == 0) throw ParameterError("validation set must be non-empty");
  const std::vector<AcquisitionScores> scores = score_all(afs, ensemble.posterior_pool(pool));

  MultiAfStepRecord rec;
  rec.candidates = candidate_points(scores);
  rec.validation_errors.resize(static_cast<Eigen::Index>(scores.size()));
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const Eigen::VectorXd x = pool.row(rec.candidates[k]).transpose();
    const double y = pseudo_label(ensemble, x);
    rec.validation_errors(static_cast<Eigen::Index>(k)) = rollout_and_score(ensemble, x, y, val_x, val_y);
  }
  afs = update_weights(afs, rec.validation_errors);
  rec.omega = afs.weights();
  rec.chosen = combined_select(scores, rec.omega);
  return rec;
}

}  // namespace egpal
