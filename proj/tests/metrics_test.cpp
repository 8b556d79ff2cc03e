#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "egpal/errors.hpp"
#include "egpal/metrics.hpp"
#include "test_util.hpp"

using namespace egpal;

namespace {

/// p(y) = integral over f of N(y; f, noise) sum_m w_m N(f; mu_m, v_m), by
/// composite Simpson on a wide grid.
double quadrature_density(double y, const Eigen::VectorXd& w, const Eigen::VectorXd& mu, const Eigen::VectorXd& v,
                          double noise) {
  const double lo = std::min(mu.minCoeff(), y) - 12.0, hi = std::max(mu.maxCoeff(), y) + 12.0;
  const int n = 200000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double f = lo + i * h;
    double prior = 0.0;
    for (Eigen::Index m = 0; m < w.size(); ++m) prior += w(m) * tu::normal_pdf(f, mu(m), v(m));
    const double g = tu::normal_pdf(y, f, noise) * prior;
    acc += (i == 0 || i == n) ? g : (i % 2 ? 4 * g : 2 * g);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST(Nmse, FivePointHandExample) {
  Eigen::VectorXd y(5), p(5);
  y << 1, 2, 3, 4, 5;   // mean 3, population variance 2
  p << 1, 3, 3, 3, 7;   // residuals 0, 1, 0, -1, 2: squared sum 6
  EXPECT_EQ(label_variance(y), 2.0);
  EXPECT_EQ(nmse(p, y, label_variance(y)), 0.6);
  EXPECT_EQ(nmse(y, y, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(nmse(Eigen::VectorXd::Constant(5, 3.0), y, 2.0), 1.0);
}

TEST(Nmse, AffineInvariantAndErrors) {
  const Eigen::VectorXd y = tu::uniform_vector(9, 1), p = tu::uniform_vector(9, 2);
  const Eigen::VectorXd ys = (3.0 * y.array() + 7.0).matrix(), ps = (3.0 * p.array() + 7.0).matrix();
  EXPECT_NEAR(nmse(p, y, label_variance(y)), nmse(ps, ys, label_variance(ys)), 1e-12);
  EXPECT_THROW(nmse(p, y, 0.0), MetricError);
  EXPECT_THROW(nmse(p.head(3), y, 1.0), MetricError);
  EXPECT_THROW(label_variance(Eigen::VectorXd(0)), MetricError);
}

TEST(Npll, SingleGaussianAndDuplicateComponents) {
  Eigen::MatrixXd mu(1, 1), s2(1, 1);
  mu << 0.4;
  s2 << 0.3;
  Eigen::VectorXd y(1);
  y << 1.1;
  const double one = npll_mixture(Eigen::VectorXd::Zero(1), mu, s2, y);
  EXPECT_NEAR(one, -std::log(tu::normal_pdf(1.1, 0.4, 0.3)), 1e-13);
  Eigen::MatrixXd mu2(1, 2), s22(1, 2);
  mu2 << 0.4, 0.4;
  s22 << 0.3, 0.3;
  EXPECT_NEAR(npll_mixture(Eigen::VectorXd::Constant(2, std::log(0.5)), mu2, s22, y), one, 1e-13);
}

TEST(Npll, ImprovesAsMeansApproachLabels) {
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Constant(3, 2, 0.2);
  const Eigen::VectorXd y = tu::uniform_vector(3, 4);
  const Eigen::VectorXd lw = Eigen::VectorXd::Constant(2, std::log(0.5));
  Eigen::MatrixXd far(3, 2), near(3, 2);
  far << y.array() + 1.0, y.array() - 1.2;
  near << y.array() + 0.5, y.array() - 0.6;
  EXPECT_LT(npll_mixture(lw, near, s2, y), npll_mixture(lw, far, s2, y));
}

// Mixture predictive density against numerical integration over f.
TEST(Npll, MatchesQuadratureOnConstructedStates) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const int M = 3, n = 4;
    const Eigen::MatrixXd mu = tu::uniform_matrix(n, M, 10 + s, -2, 2);
    const Eigen::MatrixXd v = tu::uniform_matrix(n, M, 20 + s, 0.05, 1.0);
    Eigen::VectorXd w = tu::uniform_vector(M, 30 + s, 0.1, 1.0);
    w /= w.sum();
    const Eigen::VectorXd y = tu::uniform_vector(n, 40 + s, -2, 2);
    const double noise = 0.1;
    double oracle = 0.0;
    for (int i = 0; i < n; ++i) {
      oracle -= std::log(quadrature_density(y(i), w, mu.row(i).transpose(), v.row(i).transpose(), noise));
    }
    const Eigen::MatrixXd s2 = (v.array() + noise).matrix();
    EXPECT_NEAR(npll_mixture(w.array().log().matrix(), mu, s2, y), oracle, 1e-6);
  }
}

TEST(Npll, EnsembleAddsNoiseVariance) {
  std::vector<KernelSpec> d = {{KernelKind::Rbf, 0.5, 1.0}, {KernelKind::Rbf, 2.0, 1.0}};
  Ensemble en = Ensemble::init(d, 10, 1, 0.05, 3);
  const Eigen::MatrixXd X = tu::uniform_matrix(5, 1, 4);
  for (int i = 0; i < 5; ++i) en.update(X.row(i).transpose(), X(i, 0));
  const Eigen::MatrixXd T = tu::uniform_matrix(6, 1, 5);
  const Eigen::VectorXd ty = tu::uniform_vector(6, 6);
  double oracle = 0.0;
  for (int i = 0; i < 6; ++i) oracle -= en.log_predictive_density(T.row(i).transpose(), ty(i));
  EXPECT_NEAR(npll(en, T, ty), oracle, 1e-10);

  const ExactGp gp = ExactGp::fit(X, X.col(0), {KernelKind::Rbf, 1.0, 1.0}, 0.05);
  double g = 0.0;
  for (int i = 0; i < 6; ++i) {
    const Prediction p = gp.predict(Eigen::VectorXd(T.row(i).transpose()));
    g -= std::log(tu::normal_pdf(ty(i), p.mean, p.var + 0.05));
  }
  EXPECT_NEAR(npll(gp, T, ty), g, 1e-10);
}
