#include <sstream>

#include <gtest/gtest.h>

#include "egpal/errors.hpp"
#include "egpal/gp_expert.hpp"
#include "test_util.hpp"

using namespace egpal;

namespace {

GpExpert make_expert(int D, int d, double l, double s2, double n2, std::uint64_t seed) {
  return GpExpert(draw_spectral_frequencies({KernelKind::Rbf, l, 1.0}, D, d, seed), s2, n2);
}

}  // namespace

TEST(GpExpert, PriorState) {
  const GpExpert e = make_expert(5, 2, 1.0, 2.5, 0.1, 1);
  EXPECT_EQ(e.theta_hat(), Eigen::VectorXd::Zero(10));
  EXPECT_EQ(e.sigma(), 2.5 * Eigen::MatrixXd::Identity(10, 10));
  const Prediction p = e.predict(Eigen::VectorXd(Eigen::VectorXd::Zero(2)));
  EXPECT_EQ(p.mean, 0.0);
  // Unit-norm features: prior function variance equals sigma2_theta.
  EXPECT_NEAR(p.var, 2.5, 1e-14);
}

TEST(GpExpert, RejectsBadVariances) {
  const SpectralFeatures sf = draw_spectral_frequencies({}, 3, 1, 1);
  EXPECT_THROW(GpExpert(sf, 0.0, 1.0), ParameterError);
  EXPECT_THROW(GpExpert(sf, 1.0, 0.0), ParameterError);
}

TEST(GpExpert, PredictiveLikelihoodAddsNoise) {
  GpExpert e = make_expert(6, 1, 0.8, 1.0, 0.2, 3);
  Eigen::VectorXd x(1), z(1);
  x << 0.4;
  z << -0.1;
  e.update(z, 0.7);
  const Prediction p = e.predict(x);
  const PredictiveLikelihood pl = e.predictive_likelihood(x, 0.3);
  EXPECT_DOUBLE_EQ(pl.y_hat, p.mean);
  EXPECT_NEAR(pl.s2, p.var + 0.2, 1e-15);
  EXPECT_NEAR(pl.density, tu::normal_pdf(0.3, p.mean, p.var + 0.2), 1e-13);
  EXPECT_NEAR(pl.log_density, std::log(pl.density), 1e-12);
}

// Sequential rank-1 updates against the closed-form batch posterior.
TEST(GpExpert, RecursiveMatchesBatchPosterior) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    GpExpert e = make_expert(20, 2, 0.9, 1.7, 0.05, 100 + s);
    const Eigen::MatrixXd X = tu::uniform_matrix(20, 2, 200 + s, -2, 2);
    const Eigen::VectorXd y = tu::uniform_vector(20, 300 + s, -1, 1);
    for (int i = 0; i < 20; ++i) e.update(X.row(i).transpose(), y(i));
    const tu::BlrPosterior b =
        tu::batch_blr(e.features().feature_matrix(X), y, e.sigma2_theta(), e.noise_var());
    EXPECT_LT((e.theta_hat() - b.mean).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((e.sigma() - b.cov).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(GpExpert, CovarianceStaysSymmetricAndBounded) {
  GpExpert e = make_expert(15, 3, 0.5, 1.0, 1e-3, 7);
  const Eigen::MatrixXd X = tu::uniform_matrix(80, 3, 8);
  for (int i = 0; i < 80; ++i) {
    e.update(X.row(i).transpose(), std::sin(3.0 * X(i, 0)));
    ASSERT_EQ(e.sigma(), e.sigma().transpose());
  }
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e.sigma()).eigenvalues();
  EXPECT_GT(ev.minCoeff(), -1e-9);
  EXPECT_LT(ev.maxCoeff(), 1.0 + 1e-9);
}

TEST(GpExpert, VarianceShrinksAtObservedPoint) {
  GpExpert e = make_expert(30, 1, 1.0, 1.0, 1e-4, 2);
  Eigen::VectorXd x(1);
  x << 0.25;
  const double before = e.predict(x).var;
  e.update(x, 1.0);
  const Prediction after = e.predict(x);
  EXPECT_LT(after.var, 1e-3 * before);
  EXPECT_NEAR(after.mean, 1.0, 1e-3);
  EXPECT_GE(after.var, 0.0);
}

TEST(GpExpert, BatchPredictMatchesSingle) {
  GpExpert e = make_expert(10, 2, 1.0, 1.0, 0.1, 4);
  const Eigen::MatrixXd X = tu::uniform_matrix(6, 2, 5);
  for (int i = 0; i < 3; ++i) e.update(X.row(i).transpose(), 0.5 * i);
  const BatchPrediction b = e.predict(X);
  for (int i = 0; i < 6; ++i) {
    const Prediction p = e.predict(Eigen::VectorXd(X.row(i).transpose()));
    EXPECT_NEAR(b.means(i), p.mean, 1e-13);
    EXPECT_NEAR(b.vars(i), p.var, 1e-13);
  }
}

TEST(GpExpert, NonFiniteLabelThrows) {
  GpExpert e = make_expert(4, 1, 1.0, 1.0, 0.1, 1);
  EXPECT_THROW(e.update(Eigen::VectorXd::Zero(1), NAN), ParameterError);
}

TEST(GpExpert, CheckpointRoundTripIsExact) {
  GpExpert e = make_expert(8, 3, 0.6, 1.3, 0.02, 9);
  const Eigen::MatrixXd X = tu::uniform_matrix(12, 3, 10);
  for (int i = 0; i < 12; ++i) e.update(X.row(i).transpose(), X(i, 1));
  std::stringstream buf;
  e.write(buf);
  const GpExpert back = GpExpert::read(buf);
  EXPECT_TRUE(back == e);
  const Eigen::VectorXd q = tu::uniform_vector(3, 11);
  EXPECT_EQ(back.predict(q).mean, e.predict(q).mean);
}

TEST(GpExpert, CheckpointRejectsGarbage) {
  std::stringstream buf("not a checkpoint at all");
  EXPECT_THROW(GpExpert::read(buf), ParseError);
}
