#include "egpal/gp_expert.hpp"

#include <cmath>
#include <numbers>

#include "binary_io.hpp"
#include "egpal/errors.hpp"

namespace egpal {

namespace {
constexpr char kExpertMagic[5] = "EGPX";
constexpr std::uint32_t kExpertVersion = 1;
}  // namespace

GpExpert::GpExpert(SpectralFeatures features, double sigma2_theta, double noise_var)
    : features_(std::move(features)), sigma2_theta_(sigma2_theta), noise_var_(noise_var) {
  if (!(sigma2_theta > 0.0) || !std::isfinite(sigma2_theta)) {
    throw ParameterError("prior variance sigma2_theta must be positive and finite");
  }
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
    throw ParameterError("noise variance must be positive and finite");
  }
  const int p = features_.feature_size();
  theta_hat_ = Eigen::VectorXd::Zero(p);
  sigma_ = sigma2_theta * Eigen::MatrixXd::Identity(p, p);
}

GpExpert::GpExpert(SpectralFeatures features, Eigen::VectorXd theta_hat, Eigen::MatrixXd sigma,
                   double sigma2_theta, double noise_var)
    : features_(std::move(features)),
      theta_hat_(std::move(theta_hat)),
      sigma_(std::move(sigma)),
      sigma2_theta_(sigma2_theta),
      noise_var_(noise_var) {}

Prediction GpExpert::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd phi = features_.feature_map(x);
  return {phi.dot(theta_hat_), std::max(0.0, phi.dot(sigma_ * phi))};
}

BatchPrediction GpExpert::predict(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd phi = features_.feature_matrix(X);
  BatchPrediction out;
  out.means = phi * theta_hat_;
  out.vars = (phi * sigma_).cwiseProduct(phi).rowwise().sum().cwiseMax(0.0);
  return out;
}

PredictiveLikelihood GpExpert::predictive_likelihood(const Eigen::VectorXd& x, double y) const {
  const Prediction p = predict(x);
  PredictiveLikelihood out;
  out.y_hat = p.mean;
  out.s2 = p.var + noise_var_;
  if (!(out.s2 > 0.0) || !std::isfinite(out.s2)) {
    throw NumericalError("non-positive predictive variance");
  }
  const double r = y - out.y_hat;
  out.log_density = -0.5 * std::log(2.0 * std::numbers::pi * out.s2) - 0.5 * r * r / out.s2;
  out.density = std::exp(out.log_density);
  return out;
}

void GpExpert::update(const Eigen::VectorXd& x, double y) {
  if (!std::isfinite(y)) throw ParameterError("label must be finite");
  const Eigen::VectorXd phi = features_.feature_map(x);
  const Eigen::VectorXd gain = sigma_ * phi;
  const double s2 = std::max(0.0, phi.dot(gain)) + noise_var_;
  const double residual = y - phi.dot(theta_hat_);
  theta_hat_.noalias() += gain * (residual / s2);
  sigma_.noalias() -= (gain / s2) * gain.transpose();
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
}

void GpExpert::write(std::ostream& out) const {
  detail::write_magic(out, kExpertMagic, kExpertVersion);
  detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(features_.num_features()));
  detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(features_.dim()));
  detail::write_matrix(out, features_.frequencies());
  detail::write_vector(out, theta_hat_);
  detail::write_matrix(out, sigma_);
  detail::write_pod(out, sigma2_theta_);
  detail::write_pod(out, noise_var_);
}

GpExpert GpExpert::read(std::istream& in) {
  detail::expect_magic(in, kExpertMagic, kExpertVersion);
  const auto D = detail::read_pod<std::uint64_t>(in);
  const auto d = detail::read_pod<std::uint64_t>(in);
  if (D == 0 || d == 0 || D > (1u << 20) || d > (1u << 20)) throw ParseError("implausible expert dimensions");
  const auto rows = static_cast<Eigen::Index>(D);
  const auto cols = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd freq = detail::read_matrix(in, rows, cols);
  Eigen::VectorXd theta = detail::read_vector(in, 2 * rows);
  Eigen::MatrixXd sigma = detail::read_matrix(in, 2 * rows, 2 * rows);
  const auto s2t = detail::read_pod<double>(in);
  const auto nv = detail::read_pod<double>(in);
  if (!(s2t > 0.0) || !(nv > 0.0)) throw ParseError("checkpoint carries non-positive variances");
  return GpExpert(SpectralFeatures(std::move(freq)), std::move(theta), std::move(sigma), s2t, nv);
}

bool operator==(const GpExpert& a, const GpExpert& b) {
  const auto& fa = a.features_.frequencies();
  const auto& fb = b.features_.frequencies();
  if (fa.rows() != fb.rows() || fa.cols() != fb.cols()) return false;
  return fa == fb && a.theta_hat_ == b.theta_hat_ && a.sigma_ == b.sigma_ &&
         a.sigma2_theta_ == b.sigma2_theta_ && a.noise_var_ == b.noise_var_;
}

}  // namespace egpal
