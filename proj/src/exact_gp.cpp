#include "egpal/exact_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "egpal/errors.hpp"

namespace egpal {

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const KernelSpec& spec) {
  if (A.cols() != B.cols()) throw ParameterError("gram_matrix: inputs differ in dimension");
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j) K(i, j) = spec(A.row(i).transpose(), B.row(j).transpose());
  return K;
}

ExactGp ExactGp::fit(Eigen::MatrixXd X, Eigen::VectorXd y, const KernelSpec& spec, double noise_var) {
  spec.validate();
  if (X.rows() < 1) throw ParameterError("exact GP needs at least one training point");
  if (X.rows() != y.size()) throw ParameterError("exact GP: X rows and y length differ");
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) throw ParameterError("noise variance must be >= 0");
  if (!X.allFinite() || !y.allFinite()) throw ParameterError("exact GP training data must be finite");

  ExactGp gp;
  gp.X_ = std::move(X);
  gp.y_ = std::move(y);
  gp.spec_ = spec;
  gp.noise_var_ = noise_var;

  const Eigen::MatrixXd K = gram_matrix(gp.X_, gp.X_, spec);
  const Eigen::Index t = K.rows();
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if ((L.diagonal().array() > 0.0).all()) {
        gp.chol_ = std::move(L);
        gp.jitter_ = jitter;
        break;
      }
    }
    jitter = (jitter == 0.0) ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-4 * (1.0 + 1e-9)) {
      throw NumericalError("Cholesky of K + noise I failed after jitter 1e-4 (t=" + std::to_string(t) + ")");
    }
  }
  gp.alpha_ = gp.chol_.transpose().triangularView<Eigen::Upper>().solve(
      gp.chol_.triangularView<Eigen::Lower>().solve(gp.y_));
  return gp;
}

Prediction ExactGp::predict(const Eigen::VectorXd& x) const {
  if (x.size() != X_.cols()) throw ParameterError("exact GP predict: dimension mismatch");
  Eigen::MatrixXd row = x.transpose();
  const BatchPrediction b = predict(row);
  return {b.means(0), b.vars(0)};
}

BatchPrediction ExactGp::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != X_.cols()) throw ParameterError("exact GP predict: dimension mismatch");
  const Eigen::MatrixXd Ks = gram_matrix(X_, X, spec_);  // t x n
  BatchPrediction out;
  out.means = Ks.transpose() * alpha_;
  const Eigen::MatrixXd V = chol_.triangularView<Eigen::Lower>().solve(Ks);
  out.vars = (spec_.magnitude - V.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
  return out;
}

double ExactGp::log_marginal_likelihood() const {
  const double t = static_cast<double>(y_.size());
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  return -0.5 * y_.dot(alpha_) - 0.5 * log_det - 0.5 * t * std::log(2.0 * std::numbers::pi);
}

ExactGp ExactGp::with_point(const Eigen::VectorXd& x, double y) const {
  if (x.size() != X_.cols()) throw ParameterError("exact GP with_point: dimension mismatch");
  Eigen::MatrixXd X(X_.rows() + 1, X_.cols());
  X << X_, x.transpose();
  Eigen::VectorXd yy(y_.size() + 1);
  yy << y_, y;
  return fit(std::move(X), std::move(yy), spec_, noise_var_);
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                               double noise_var) {
  return ExactGp::fit(X, y, spec, noise_var).log_marginal_likelihood();
}

HyperparameterGrids default_hyperparameter_grids(const Eigen::VectorXd& y, int lo_exponent, int hi_exponent) {
  if (y.size() < 1) throw ParameterError("cannot build hyperparameter grids from empty labels");
  const double mean = y.mean();
  double var = (y.array() - mean).square().mean();
  if (!(var > 0.0)) var = 1.0;
  HyperparameterGrids g;
  for (int c = lo_exponent; c <= hi_exponent; ++c) g.lengthscales.push_back(std::pow(10.0, c));
  for (double f : {0.1, 0.5, 1.0, 2.0, 5.0}) g.magnitudes.push_back(f * var);
  for (int c = -4; c <= 0; ++c) g.noise_vars.push_back(std::pow(10.0, c) * var);
  return g;
}

HyperparameterFit fit_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const HyperparameterGrids& grids) {
  if (grids.lengthscales.empty() || grids.magnitudes.empty() || grids.noise_vars.empty()) {
    throw ParameterError("hyperparameter grids must be non-empty");
  }
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto ls = sorted(grids.lengthscales);
  const auto mags = sorted(grids.magnitudes);
  const auto noises = sorted(grids.noise_vars);

  bool found = false;
  HyperparameterFit best;
  best.log_marginal_likelihood = -std::numeric_limits<double>::infinity();
  for (double l : ls) {
    for (double s2 : mags) {
      for (double n2 : noises) {
        KernelSpec spec{KernelKind::Rbf, l, s2};
        double lml = 0.0;
        try {
          lml = log_marginal_likelihood(X, y, spec, n2);
        } catch (const NumericalError&) {
          continue;
        }
        if (!std::isfinite(lml)) continue;
        if (!found || lml > best.log_marginal_likelihood) {
          best = {spec, n2, lml};
          found = true;
        }
      }
    }
  }
  if (!found) throw FitError("every hyperparameter grid point failed to factorize");
  return best;
}

}  // namespace egpal
