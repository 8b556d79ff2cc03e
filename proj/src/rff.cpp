#include "egpal/rff.hpp"

#include <cmath>
#include <random>

#include "egpal/errors.hpp"

namespace egpal {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Rbf:
      return "rbf";
  }
  return "unknown";
}

void KernelSpec::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw ParameterError("kernel lengthscale must be positive and finite, got " + std::to_string(lengthscale));
  }
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
    throw ParameterError("kernel magnitude must be positive and finite, got " + std::to_string(magnitude));
  }
}

double KernelSpec::standardized(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) const {
  if (x.size() != xp.size()) {
    throw ParameterError("kernel arguments differ in dimension");
  }
  const double r2 = (x - xp).squaredNorm();
  return std::exp(-0.5 * r2 / (lengthscale * lengthscale));
}

Eigen::MatrixXd draw_standard_normals(int num_features, int dim, std::uint64_t seed) {
  if (num_features < 1) throw ParameterError("number of random features must be >= 1");
  if (dim < 1) throw ParameterError("input dimension must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(num_features, dim);
  // Row-major fill order so the draw sequence does not depend on Eigen's storage.
  for (int j = 0; j < num_features; ++j) {
    for (int k = 0; k < dim; ++k) z(j, k) = normal(rng);
  }
  return z;
}

SpectralFeatures::SpectralFeatures(Eigen::MatrixXd frequencies)
    : frequencies_(std::move(frequencies)) {
  if (frequencies_.rows() < 1 || frequencies_.cols() < 1) {
    throw ParameterError("spectral frequency matrix must be non-empty");
  }
  if (!frequencies_.allFinite()) throw ParameterError("spectral frequencies must be finite");
  scale_ = 1.0 / std::sqrt(static_cast<double>(frequencies_.rows()));
}

SpectralFeatures SpectralFeatures::from_standard_normals(const Eigen::MatrixXd& normals,
                                                         const KernelSpec& spec) {
  spec.validate();
  // RBF spectral density is N(0, I / lengthscale^2).
  return SpectralFeatures(normals / spec.lengthscale);
}

void SpectralFeatures::check_dim(Eigen::Index n) const {
  if (n != frequencies_.cols()) {
    throw ParameterError("feature map input has dimension " + std::to_string(n) + ", expected " +
                         std::to_string(frequencies_.cols()));
  }
}

Eigen::VectorXd SpectralFeatures::feature_map(const Eigen::VectorXd& x) const {
  check_dim(x.size());
  const Eigen::VectorXd proj = frequencies_ * x;
  Eigen::VectorXd phi(2 * proj.size());
  for (Eigen::Index j = 0; j < proj.size(); ++j) {
    phi(2 * j) = scale_ * std::sin(proj(j));
    phi(2 * j + 1) = scale_ * std::cos(proj(j));
  }
  return phi;
}

Eigen::MatrixXd SpectralFeatures::feature_matrix(const Eigen::MatrixXd& X) const {
  check_dim(X.cols());
  const Eigen::MatrixXd proj = X * frequencies_.transpose();
  Eigen::MatrixXd phi(X.rows(), 2 * proj.cols());
  for (Eigen::Index j = 0; j < proj.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      phi(i, 2 * j) = scale_ * std::sin(proj(i, j));
      phi(i, 2 * j + 1) = scale_ * std::cos(proj(i, j));
    }
  }
  return phi;
}

double SpectralFeatures::approx_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) const {
  check_dim(x.size());
  check_dim(xp.size());
  return feature_map(x).dot(feature_map(xp));
}

SpectralFeatures draw_spectral_frequencies(const KernelSpec& spec, int num_features, int dim,
                                           std::uint64_t seed) {
  spec.validate();
  return SpectralFeatures::from_standard_normals(draw_standard_normals(num_features, dim, seed), spec);
}

}  // namespace egpal
