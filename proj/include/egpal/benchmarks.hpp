#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace egpal {

/// Analytic test function on a box domain.
struct Benchmark {
  std::string name;
  int dim = 0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::function<double(const Eigen::VectorXd&)> fn;

  /// Throws DomainError outside [lower, upper] and ParameterError on a
  /// dimension mismatch.
  [[nodiscard]] double eval(const Eigen::VectorXd& x) const;
};

double ackley5d(const Eigen::VectorXd& x);
double branin(const Eigen::VectorXd& x);
double currin_exponential(const Eigen::VectorXd& x);
double gramacy(const Eigen::VectorXd& x);
double higdon(const Eigen::VectorXd& x);

/// ackley5d, branin, currin, gramacy, higdon.
const std::vector<Benchmark>& benchmarks();
const Benchmark* find_benchmark(std::string_view name);

struct SplitSpec {
  int n_l0 = 10;
  int n_v = 50;
  int n_u0 = 500;
  int n_t = 100;

  [[nodiscard]] int total() const { return n_l0 + n_v + n_u0 + n_t; }
  void validate() const;
};

/// Per-task split sizes and learning rate used in the reference experiments.
struct TaskPreset {
  std::string name;
  SplitSpec split;
  double eta = 1.0;
};

const std::vector<TaskPreset>& task_presets();
const TaskPreset* find_task_preset(std::string_view name);

struct RawDataset {
  std::vector<std::string> feature_names;
  std::string target_name;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// Comma-separated numeric table with a header row; `target_column` names the label.
/// Throws ParseError (with row/column) on malformed content.
RawDataset load_csv(const std::filesystem::path& path, const std::string& target_column);
RawDataset parse_csv(std::string_view text, const std::string& target_column);

/// Affine map applied to every pool: x -> (x - input_mean) / input_scale and
/// y -> y - label_mean.
struct Standardizer {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  double label_mean = 0.0;

  /// Statistics of the given rows (population variance; zero spread maps to scale 1).
  static Standardizer fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

  [[nodiscard]] Eigen::MatrixXd transform_inputs(const Eigen::MatrixXd& X) const;
  [[nodiscard]] Eigen::MatrixXd inverse_inputs(const Eigen::MatrixXd& Z) const;
  [[nodiscard]] Eigen::VectorXd transform_labels(const Eigen::VectorXd& y) const;
  [[nodiscard]] Eigen::VectorXd inverse_labels(const Eigen::VectorXd& y) const;
};

/// Labelled, validation, unlabelled and test pools, all standardized. Pool
/// labels are hidden from the learner and only revealed through the oracle.
struct DataPools {
  Eigen::MatrixXd l0_x;
  Eigen::VectorXd l0_y;
  Eigen::MatrixXd v_x;
  Eigen::VectorXd v_y;
  Eigen::MatrixXd u0_x;
  Eigen::VectorXd u0_y;
  Eigen::MatrixXd t_x;
  Eigen::VectorXd t_y;
  Standardizer standardizer;
};

/// Uniform draws in the benchmark box, noiseless labels.
DataPools make_pools(const Benchmark& bench, const SplitSpec& split, std::uint64_t seed);

/// Shuffled row split of a dataset. Throws ParameterError if it has too few rows.
DataPools make_pools(const RawDataset& data, const SplitSpec& split, std::uint64_t seed);

}  // namespace egpal
