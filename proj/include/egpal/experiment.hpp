#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "egpal/acquisition.hpp"
#include "egpal/benchmarks.hpp"
#include "egpal/exact_gp.hpp"
#include "egpal/metrics.hpp"
#include "egpal/multi_af.hpp"

namespace egpal {

enum class MethodKind { GpVar, Egp, MultiAf, Random };

struct Method {
  MethodKind kind = MethodKind::Egp;
  AcquisitionKind af = AcquisitionKind::WVar;  // used when kind == Egp

  static Method gp_var() { return {MethodKind::GpVar, AcquisitionKind::SingleGpVar}; }
  static Method egp(AcquisitionKind af) { return {MethodKind::Egp, af}; }
  static Method multi_af() { return {MethodKind::MultiAf, AcquisitionKind::WVar}; }
  static Method random() { return {MethodKind::Random, AcquisitionKind::WVar}; }

  friend bool operator==(const Method&, const Method&) = default;
};

/// gp-var, egp-wvar, egp-went, egp-qbc, egp-gpm-var, egp-gpm-ent, egp-multiaf, random.
std::string to_string(const Method& m);
std::optional<Method> parse_method(std::string_view name);
const std::vector<Method>& all_methods();

struct ExperimentConfig {
  std::string task = "gramacy";  // benchmark name or CSV path
  std::string target;            // CSV label column
  std::string preset;            // split/eta preset; defaults to the task name
  std::vector<Method> methods = {Method::egp(AcquisitionKind::WVar)};
  int num_features = 50;
  int lengthscale_min_exp = -4;
  int lengthscale_max_exp = 6;
  std::optional<double> eta;
  int iters = 50;
  int n_realizations = 10;
  std::uint64_t seed = 0;
  std::optional<int> n_l0, n_v, n_u0, n_t;
  std::vector<AcquisitionKind> multiaf_rules = ensemble_acquisition_kinds();
  std::string output = "egpal_run";
  bool record_runtime = true;
  bool audit = false;  // check model invariants every iteration

  /// Throws ConfigError on out-of-range fields.
  void validate() const;

  [[nodiscard]] SplitSpec resolved_split() const;
  [[nodiscard]] double resolved_eta() const;
  [[nodiscard]] std::vector<KernelSpec> dictionary(double magnitude) const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Flat `key = value` text. Lines starting with '#' are comments. Unknown keys
/// and malformed values raise ConfigError.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
void apply_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Labelled data for one task, synthetic or loaded from CSV.
class TaskSource {
 public:
  static TaskSource resolve(const ExperimentConfig& cfg);

  [[nodiscard]] DataPools make_pools(const SplitSpec& split, std::uint64_t seed) const;
  [[nodiscard]] bool is_benchmark() const { return bench_ != nullptr; }
  [[nodiscard]] const std::string& name() const { return name_; }

 private:
  std::string name_;
  const Benchmark* bench_ = nullptr;
  std::optional<RawDataset> data_;
};

/// Seed streams derived from a realization seed.
struct RealizationSeeds {
  std::uint64_t pools;
  std::uint64_t features;
  std::uint64_t selection;

  static RealizationSeeds derive(std::uint64_t realization_seed);
};

struct AfTraceRecord {
  int t = 0;
  Eigen::VectorXd omega;
  std::vector<int> candidate_ids;
  Eigen::VectorXd validation_errors;
  int chosen_id = 0;
};

struct AuditReport {
  long checks = 0;
  std::vector<std::string> violations;

  void check(bool ok, const std::string& what);
  [[nodiscard]] bool clean() const { return violations.empty(); }
};

struct RealizationResult {
  std::uint64_t seed = 0;
  bool truncated = false;
  std::vector<IterationMetrics> metrics;  // t = 0 .. T
  std::vector<int> queried_ids;           // indices into U_0
  std::vector<AfTraceRecord> af_trace;    // multi-rule method only
  HyperparameterFit hyperparameters;
  AuditReport audit;
};

struct Curve {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct RunResult {
  Method method;
  std::vector<RealizationResult> realizations;
  Curve nmse;
  Curve npll;
  double wall_ms = 0.0;
};

/// Callbacks for instrumented runs.
struct RunHooks {
  /// Every input that enters a true-label model update.
  std::function<void(const Eigen::VectorXd& x)> on_model_update;
  /// Every validation-set evaluation performed by the multi-rule method.
  std::function<void()> on_validation_use;
};

/// Single-rule active learning loop (also the gp-var and random baselines).
RealizationResult run_single_rule(const ExperimentConfig& cfg, const Method& method, const DataPools& pools,
                                 const RealizationSeeds& seeds, const RunHooks& hooks = {});

/// Multi-rule loop with pseudo-label rollouts on the validation set.
RealizationResult run_multi_rule(const ExperimentConfig& cfg, const DataPools& pools,
                                 const RealizationSeeds& seeds, const RunHooks& hooks = {});

/// Pointwise mean and sample standard deviation over curves; truncated to the
/// shortest curve.
Curve aggregate(const std::vector<std::vector<double>>& curves);

/// All realizations of one method, in parallel over EGPAL_THREADS workers.
RunResult run_method(const ExperimentConfig& cfg, const TaskSource& source, const Method& method);

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

/// Long-format CSV: iteration,method,seed,nmse,npll.
void write_results_csv(std::ostream& out, const std::vector<RunResult>& results);
nlohmann::json summary_json(const ExperimentConfig& cfg, const std::vector<RunResult>& results, double runtime_ms);

/// Wide table: iteration then mean NMSE/NPLL per method.
void write_joined_table(std::ostream& out, const std::vector<RunResult>& results);

}  // namespace egpal
