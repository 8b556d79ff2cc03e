#include "egpal/egp.hpp"

#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "egpal/errors.hpp"

namespace egpal {

namespace {
constexpr char kEnsembleMagic[5] = "EGPE";
constexpr std::uint32_t kEnsembleVersion = 1;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

double MixturePrediction::mixture_variance() const {
  double total = 0.0;
  for (Eigen::Index m = 0; m < means.size(); ++m) {
    const double dev = means(m) - consensus_mean;
    total += weights(m) * (vars(m) + dev * dev);
  }
  return total;
}

PoolPosterior PoolPosterior::from_moments(Eigen::MatrixXd means, Eigen::MatrixXd vars, Eigen::VectorXd weights) {
  if (means.rows() != vars.rows() || means.cols() != vars.cols() || means.cols() != weights.size()) {
    throw ParameterError("pool posterior moments have inconsistent shapes");
  }
  PoolPosterior out;
  out.log_weights = weights.array().log().matrix();
  out.means = std::move(means);
  out.vars = std::move(vars);
  out.weights = std::move(weights);
  return out;
}

Eigen::VectorXd exp_weights(const Eigen::VectorXd& log_w) {
  return log_w.unaryExpr([](double v) { return std::exp(v); });
}

double log_sum_exp(const Eigen::VectorXd& v) {
  double hi = kNegInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) hi = std::max(hi, v(i));
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != kNegInf) acc += std::exp(v(i) - hi);
  }
  return hi + std::log(acc);
}

Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& v) {
  if (v.hasNaN()) throw NumericalError("NaN in log-weights");
  const double lse = log_sum_exp(v);
  if (lse == kNegInf || !std::isfinite(lse)) {
    throw NumericalError("log-weights cannot be normalized: all entries are -inf");
  }
  return (v.array() - lse).matrix();
}

Ensemble::Ensemble(std::vector<GpExpert> experts, std::vector<KernelSpec> specs, Eigen::VectorXd log_weights)
    : experts_(std::move(experts)), specs_(std::move(specs)), log_weights_(std::move(log_weights)) {}

Ensemble Ensemble::init(std::span<const KernelSpec> dictionary, int num_features, int dim, double noise_var,
                        std::uint64_t seed) {
  if (dictionary.empty()) throw ParameterError("kernel dictionary must be non-empty");
  const Eigen::MatrixXd normals = draw_standard_normals(num_features, dim, seed);
  std::vector<GpExpert> experts;
  std::vector<KernelSpec> specs;
  experts.reserve(dictionary.size());
  for (const KernelSpec& spec : dictionary) {
    spec.validate();
    experts.emplace_back(SpectralFeatures::from_standard_normals(normals, spec), spec.magnitude, noise_var);
    specs.push_back(spec);
  }
  const auto M = static_cast<Eigen::Index>(dictionary.size());
  Eigen::VectorXd log_w = Eigen::VectorXd::Constant(M, -std::log(static_cast<double>(M)));
  return Ensemble(std::move(experts), std::move(specs), std::move(log_w));
}

MixturePrediction Ensemble::posterior_mixture(const Eigen::VectorXd& x) const {
  const auto M = static_cast<Eigen::Index>(experts_.size());
  MixturePrediction out;
  out.means.resize(M);
  out.vars.resize(M);
  out.weights = weights();
  for (Eigen::Index m = 0; m < M; ++m) {
    const Prediction p = experts_[static_cast<std::size_t>(m)].predict(x);
    out.means(m) = p.mean;
    out.vars(m) = p.var;
  }
  out.consensus_mean = out.weights.dot(out.means);
  return out;
}

PoolPosterior Ensemble::posterior_pool(const Eigen::MatrixXd& X) const {
  const auto M = static_cast<Eigen::Index>(experts_.size());
  PoolPosterior out;
  out.means.resize(X.rows(), M);
  out.vars.resize(X.rows(), M);
  out.weights = weights();
  out.log_weights = log_weights_;
  for (Eigen::Index m = 0; m < M; ++m) {
    BatchPrediction p = experts_[static_cast<std::size_t>(m)].predict(X);
    out.means.col(m) = p.means;
    out.vars.col(m) = p.vars;
  }
  return out;
}

double Ensemble::consensus_mean(const Eigen::VectorXd& x) const {
  return posterior_mixture(x).consensus_mean;
}

Eigen::VectorXd Ensemble::consensus_mean(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  const Eigen::VectorXd w = weights();
  for (std::size_t m = 0; m < experts_.size(); ++m) {
    const double wm = w(static_cast<Eigen::Index>(m));
    if (wm == 0.0) continue;
    out += wm * experts_[m].predict(X).means;
  }
  return out;
}

double Ensemble::log_predictive_density(const Eigen::VectorXd& x, double y) const {
  Eigen::VectorXd terms(static_cast<Eigen::Index>(experts_.size()));
  for (std::size_t m = 0; m < experts_.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    terms(i) = log_weights_(i) + experts_[m].predictive_likelihood(x, y).log_density;
  }
  return log_sum_exp(terms);
}

void Ensemble::update(const Eigen::VectorXd& x, double y) {
  if (!std::isfinite(y) || !x.allFinite()) throw ParameterError("update requires a finite (x, y) pair");
  Eigen::VectorXd next = log_weights_;
  for (std::size_t m = 0; m < experts_.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    next(i) += experts_[m].predictive_likelihood(x, y).log_density;
  }
  log_weights_ = normalize_log_weights(next);
  for (GpExpert& expert : experts_) expert.update(x, y);
}

Ensemble Ensemble::updated(const Eigen::VectorXd& x, double y) const {
  Ensemble copy = *this;
  copy.update(x, y);
  return copy;
}

void Ensemble::write(std::ostream& out) const {
  detail::write_magic(out, kEnsembleMagic, kEnsembleVersion);
  detail::write_pod<std::uint64_t>(out, experts_.size());
  for (const KernelSpec& spec : specs_) {
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(spec.kind));
    detail::write_pod(out, spec.lengthscale);
    detail::write_pod(out, spec.magnitude);
  }
  for (const GpExpert& expert : experts_) expert.write(out);
  detail::write_vector(out, log_weights_);
}

Ensemble Ensemble::read(std::istream& in) {
  detail::expect_magic(in, kEnsembleMagic, kEnsembleVersion);
  const auto M = detail::read_pod<std::uint64_t>(in);
  if (M == 0 || M > 4096) throw ParseError("implausible ensemble size");
  std::vector<KernelSpec> specs(M);
  for (KernelSpec& spec : specs) {
    const auto kind = detail::read_pod<std::uint32_t>(in);
    if (kind != static_cast<std::uint32_t>(KernelKind::Rbf)) throw ParseError("unknown kernel kind in checkpoint");
    spec.kind = KernelKind::Rbf;
    spec.lengthscale = detail::read_pod<double>(in);
    spec.magnitude = detail::read_pod<double>(in);
  }
  std::vector<GpExpert> experts;
  experts.reserve(M);
  for (std::uint64_t m = 0; m < M; ++m) experts.push_back(GpExpert::read(in));
  Eigen::VectorXd log_w = detail::read_vector(in, static_cast<Eigen::Index>(M));
  return Ensemble(std::move(experts), std::move(specs), std::move(log_w));
}

bool operator==(const Ensemble& a, const Ensemble& b) {
  if (a.experts_.size() != b.experts_.size()) return false;
  for (std::size_t m = 0; m < a.experts_.size(); ++m) {
    if (!(a.experts_[m] == b.experts_[m])) return false;
    if (a.specs_[m].lengthscale != b.specs_[m].lengthscale || a.specs_[m].magnitude != b.specs_[m].magnitude)
      return false;
  }
  return a.log_weights_ == b.log_weights_;
}

}  // namespace egpal
