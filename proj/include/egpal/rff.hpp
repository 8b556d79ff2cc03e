#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace egpal {

enum class KernelKind { Rbf };

std::string to_string(KernelKind kind);

/// Scaled shift-invariant kernel kappa = magnitude * kappa_bar, where
/// kappa_bar is the standardized (unit-variance) kernel.
struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double lengthscale = 1.0;
  double magnitude = 1.0;

  /// Throws ParameterError unless lengthscale and magnitude are positive and finite.
  void validate() const;

  /// Exact standardized kernel kappa_bar(x - x').
  [[nodiscard]] double standardized(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) const;

  /// Exact scaled kernel magnitude * kappa_bar(x - x').
  [[nodiscard]] double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) const {
    return magnitude * standardized(x, xp);
  }
};

/// D x d matrix of i.i.d. standard normal draws. Shared across the experts of an
/// ensemble so that every expert sees the same underlying random numbers.
Eigen::MatrixXd draw_standard_normals(int num_features, int dim, std::uint64_t seed);

/// Random Fourier feature map for one standardized kernel.
///
/// phi(x) = D^{-1/2} [sin(z_1'x), cos(z_1'x), ..., sin(z_D'x), cos(z_D'x)]
///
/// so that phi(x)'phi(x') = D^{-1} sum_j cos(z_j'(x - x')) approximates kappa_bar.
/// Immutable after construction.
class SpectralFeatures {
 public:
  /// Takes ownership of a D x d frequency matrix (one frequency per row).
  explicit SpectralFeatures(Eigen::MatrixXd frequencies);

  /// Scales standard normal draws into spectral samples of the kernel in `spec`.
  static SpectralFeatures from_standard_normals(const Eigen::MatrixXd& normals, const KernelSpec& spec);

  [[nodiscard]] int num_features() const { return static_cast<int>(frequencies_.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(frequencies_.cols()); }
  [[nodiscard]] int feature_size() const { return 2 * num_features(); }
  [[nodiscard]] const Eigen::MatrixXd& frequencies() const { return frequencies_; }

  [[nodiscard]] Eigen::VectorXd feature_map(const Eigen::VectorXd& x) const;

  /// Row i holds feature_map(X.row(i)).
  [[nodiscard]] Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& X) const;

  [[nodiscard]] double approx_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) const;

 private:
  void check_dim(Eigen::Index n) const;

  Eigen::MatrixXd frequencies_;
  double scale_;
};

/// Draws D spectral frequencies of the standardized kernel from `seed`.
SpectralFeatures draw_spectral_frequencies(const KernelSpec& spec, int num_features, int dim,
                                           std::uint64_t seed);

}  // namespace egpal
