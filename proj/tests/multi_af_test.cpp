#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "egpal/errors.hpp"
#include "egpal/multi_af.hpp"
#include "test_util.hpp"

using namespace egpal;

namespace {

Ensemble trained_ensemble(std::uint64_t seed, int n_train = 6) {
  std::vector<KernelSpec> d = {{KernelKind::Rbf, 0.1, 1.0}, {KernelKind::Rbf, 1.0, 1.0}, {KernelKind::Rbf, 10.0, 1.0}};
  Ensemble en = Ensemble::init(d, 20, 2, 0.01, seed);
  const Eigen::MatrixXd X = tu::uniform_matrix(n_train, 2, seed + 1);
  for (int i = 0; i < n_train; ++i) en.update(X.row(i).transpose(), std::sin(2 * X(i, 0)) + X(i, 1));
  return en;
}

AcquisitionScores scores_of(std::initializer_list<double> v) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) s(i++) = x;
  return make_scores(s);
}

}  // namespace

TEST(AfEnsemble, InitUniform) {
  const AfEnsembleState s = AfEnsembleState::init(ensemble_acquisition_kinds(), 2.0);
  EXPECT_EQ(s.size(), 5u);
  EXPECT_NEAR(s.weights().sum(), 1.0, 1e-15);
  EXPECT_NEAR(s.weights()(3), 0.2, 1e-15);
  EXPECT_THROW(AfEnsembleState::init({}, 1.0), ParameterError);
  EXPECT_THROW(AfEnsembleState::init({AcquisitionKind::SingleGpVar}, 1.0), ParameterError);
  EXPECT_THROW(AfEnsembleState::init({AcquisitionKind::WVar}, -1.0), ParameterError);
}

TEST(AfEnsemble, SoftmaxHandValues) {
  AfEnsembleState s = AfEnsembleState::init({AcquisitionKind::WVar, AcquisitionKind::Qbc}, 1.0);
  Eigen::VectorXd err(2);
  err << 0.0, 1.0;
  const Eigen::VectorXd w = update_weights(s, err).weights();
  const double e = std::exp(1.0);
  EXPECT_NEAR(w(0), e / (e + 1), 1e-15);
  EXPECT_NEAR(w(1), 1 / (e + 1), 1e-15);
  EXPECT_NEAR(w(0), 0.7311, 5e-5);
  EXPECT_NEAR(w(1), 0.2689, 5e-5);
}

TEST(AfEnsemble, NeutralUpdates) {
  AfEnsembleState s = AfEnsembleState::init({AcquisitionKind::WVar, AcquisitionKind::Qbc, AcquisitionKind::WEnt}, 0.0);
  Eigen::VectorXd err(3);
  err << 0.3, 5.0, 1.0;
  EXPECT_TRUE(update_weights(s, err).weights().isApprox(s.weights(), 1e-15));
  s.eta = 7.0;
  err.setConstant(2.5);
  EXPECT_TRUE(update_weights(s, err).weights().isApprox(s.weights(), 1e-14));
  EXPECT_THROW(update_weights(s, Eigen::VectorXd::Zero(2)), ParameterError);
}

TEST(NormalizeScores, MinMax) {
  Eigen::VectorXd s(3);
  s << -2.0, 0.0, 2.0;
  const Eigen::VectorXd n = normalize_scores(s);
  EXPECT_DOUBLE_EQ(n(0), 0.0);
  EXPECT_DOUBLE_EQ(n(1), 0.5);
  EXPECT_DOUBLE_EQ(n(2), 1.0);
  EXPECT_EQ(normalize_scores(Eigen::VectorXd::Constant(4, 3.0)), Eigen::VectorXd::Zero(4));
}

TEST(CombinedSelect, ThreePointHandExample) {
  // Rule A normalizes to (0, 0.5, 1), rule B to (1, 0.8, 0). With uniform
  // weights the sums are (0.5, 0.65, 0.5): point 1 wins although neither rule
  // picks it on its own.
  const std::vector<AcquisitionScores> sc = {scores_of({1.0, 2.0, 3.0}), scores_of({10.0, 8.0, 0.0})};
  EXPECT_EQ(combined_select(sc, Eigen::VectorXd::Constant(2, 0.5)), 1);
  Eigen::VectorXd one_hot(2);
  one_hot << 0.0, 1.0;
  EXPECT_EQ(combined_select(sc, one_hot), 0);
  one_hot << 1.0, 0.0;
  EXPECT_EQ(combined_select(sc, one_hot), 2);
}

TEST(CombinedSelect, SingleRuleMatchesItsArgmax) {
  const std::vector<AcquisitionScores> sc = {scores_of({-3.0, -1.0, -2.0, -1.0})};
  EXPECT_EQ(combined_select(sc, Eigen::VectorXd::Ones(1)), sc[0].argmax_index);
  EXPECT_EQ(combined_select(sc, Eigen::VectorXd::Ones(1)), 1);
}

TEST(PseudoLabel, ConsensusMean) {
  const Eigen::VectorXd x = tu::uniform_vector(2, 30);
  const Ensemble prior = trained_ensemble(1, 0);
  EXPECT_EQ(pseudo_label(prior, x), 0.0);
  const Ensemble en = trained_ensemble(1);
  EXPECT_NEAR(pseudo_label(en, x), en.posterior_mixture(x).consensus_mean, 1e-12);
}

TEST(Rollout, MatchesManualCloneUpdatePredict) {
  const Ensemble en = trained_ensemble(2);
  std::stringstream before;
  en.write(before);
  const Eigen::MatrixXd vx = tu::uniform_matrix(9, 2, 40);
  const Eigen::VectorXd vy = tu::uniform_vector(9, 41);
  const Eigen::VectorXd x = tu::uniform_vector(2, 42);
  const double err = rollout_and_score(en, x, 0.4, vx, vy);

  Ensemble manual = en;
  manual.update(x, 0.4);
  double mse = 0.0;
  for (int i = 0; i < 9; ++i) {
    const MixturePrediction mp = manual.posterior_mixture(vx.row(i).transpose());
    mse += (vy(i) - mp.consensus_mean) * (vy(i) - mp.consensus_mean);
  }
  EXPECT_NEAR(err, mse / 9.0, 1e-12);

  std::stringstream after;
  en.write(after);
  EXPECT_EQ(before.str(), after.str());
  EXPECT_THROW(rollout_and_score(en, x, 0.4, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), ParameterError);
}

TEST(Rollout, SinglePointSquaredResidual) {
  // Prior ensemble with a pseudo-label of 0 keeps every mean at 0.
  const Ensemble prior = trained_ensemble(3, 0);
  Eigen::MatrixXd vx(1, 2);
  vx << 0.3, -0.2;
  Eigen::VectorXd vy(1);
  vy << 1.5;
  EXPECT_NEAR(rollout_and_score(prior, Eigen::VectorXd::Zero(2), 0.0, vx, vy), 2.25, 1e-24);
}

TEST(Candidates, MatchIndependentScoring) {
  const Ensemble en = trained_ensemble(4);
  const Eigen::MatrixXd pool = tu::uniform_matrix(25, 2, 50);
  const AfEnsembleState afs = AfEnsembleState::init(ensemble_acquisition_kinds(), 1.0);
  const std::vector<Eigen::Index> c = candidate_points(en, afs, pool);
  ASSERT_EQ(c.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(c[k], score(afs.kinds[k], en, pool).argmax_index);
}

TEST(Candidates, SingleExpertRulesCoincide) {
  Ensemble en = Ensemble::init(std::vector<KernelSpec>{{KernelKind::Rbf, 0.5, 1.0}}, 20, 2, 0.01, 5);
  const Eigen::MatrixXd pool = tu::uniform_matrix(30, 2, 51);
  for (int i = 0; i < 4; ++i) en.update(pool.row(i).transpose(), 0.1 * i);
  AfEnsembleState afs = AfEnsembleState::init(
      {AcquisitionKind::WVar, AcquisitionKind::WEnt, AcquisitionKind::GpmVar, AcquisitionKind::GpmEnt}, 1.0);
  const std::vector<Eigen::Index> c = candidate_points(en, afs, pool);
  for (Eigen::Index i : c) EXPECT_EQ(i, c[0]);
}

TEST(MultiAfStep, OneRuleSelectsLikeThatRule) {
  const Ensemble en = trained_ensemble(6);
  const Eigen::MatrixXd pool = tu::uniform_matrix(40, 2, 60);
  const Eigen::MatrixXd vx = tu::uniform_matrix(10, 2, 61);
  const Eigen::VectorXd vy = tu::uniform_vector(10, 62);
  for (AcquisitionKind k : ensemble_acquisition_kinds()) {
    AfEnsembleState afs = AfEnsembleState::init({k}, 3.0);
    const MultiAfStepRecord rec = multi_af_step(en, afs, pool, vx, vy);
    EXPECT_EQ(rec.chosen, score(k, en, pool).argmax_index) << to_string(k);
    EXPECT_NEAR(rec.omega(0), 1.0, 1e-15);
  }
}

TEST(MultiAfStep, RecordConsistency) {
  const Ensemble en = trained_ensemble(7);
  const Ensemble copy = en;
  const Eigen::MatrixXd pool = tu::uniform_matrix(40, 2, 70);
  const Eigen::MatrixXd vx = tu::uniform_matrix(10, 2, 71);
  const Eigen::VectorXd vy = tu::uniform_vector(10, 72);
  AfEnsembleState afs = AfEnsembleState::init(ensemble_acquisition_kinds(), 5.0);
  const AfEnsembleState start = afs;
  const MultiAfStepRecord rec = multi_af_step(en, afs, pool, vx, vy);
  EXPECT_TRUE(en == copy);
  EXPECT_NEAR(rec.omega.sum(), 1.0, 1e-12);
  EXPECT_TRUE(rec.omega.isApprox(update_weights(start, rec.validation_errors).weights(), 1e-15));
  for (std::size_t k = 0; k < 5; ++k) {
    const Eigen::VectorXd x = pool.row(rec.candidates[k]).transpose();
    EXPECT_DOUBLE_EQ(rec.validation_errors(static_cast<Eigen::Index>(k)),
                     rollout_and_score(en, x, pseudo_label(en, x), vx, vy));
  }
}

TEST(AfEnsemble, LargeErrorsStayOnSimplex) {
  AfEnsembleState s = AfEnsembleState::init(ensemble_acquisition_kinds(), 100.0);
  Eigen::VectorXd err(5);
  err << 8749.3132285, 8749.3243894, 8749.3132285, 8749.3132285, 8749.3132285;
  s = update_weights(s, err);
  EXPECT_NEAR(s.weights().sum(), 1.0, 1e-12);
  // Only differences matter: 100 * 0.0111609 in log space.
  EXPECT_NEAR(std::log(s.weights()(0) / s.weights()(1)), 100.0 * (8749.3243894 - 8749.3132285), 1e-6);
}
