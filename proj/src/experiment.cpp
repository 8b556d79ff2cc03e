#include "egpal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <random>
#include <thread>

#include "egpal/errors.hpp"

namespace egpal {

// ---------------------------------------------------------------------------
// Methods

std::string to_string(const Method& m) {
  switch (m.kind) {
    case MethodKind::GpVar:
      return "gp-var";
    case MethodKind::Egp:
      return "egp-" + to_string(m.af);
    case MethodKind::MultiAf:
      return "egp-multiaf";
    case MethodKind::Random:
      return "random";
  }
  return "unknown";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> all = [] {
    std::vector<Method> v{Method::gp_var()};
    for (AcquisitionKind k : ensemble_acquisition_kinds()) v.push_back(Method::egp(k));
    v.push_back(Method::multi_af());
    v.push_back(Method::random());
    return v;
  }();
  return all;
}

std::optional<Method> parse_method(std::string_view name) {
  for (const Method& m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (task.empty()) throw ConfigError("task must be set");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (num_features < 1) throw ConfigError("features must be >= 1");
  if (lengthscale_min_exp > lengthscale_max_exp) throw ConfigError("lengthscale exponent range is empty");
  if (lengthscale_min_exp < -30 || lengthscale_max_exp > 30) throw ConfigError("lengthscale exponents out of range");
  if (iters < 0) throw ConfigError("iters must be >= 0");
  if (n_realizations < 1) throw ConfigError("seeds must be >= 1");
  if (eta && (!(*eta >= 0.0) || !std::isfinite(*eta))) throw ConfigError("eta must be finite and >= 0");
  if (multiaf_rules.empty()) throw ConfigError("multiaf_rules must name at least one rule");
  for (AcquisitionKind k : multiaf_rules) {
    if (k == AcquisitionKind::SingleGpVar) throw ConfigError("gp-var cannot be a multiaf rule");
  }
  try {
    resolved_split().validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  const bool multi = std::any_of(methods.begin(), methods.end(),
                                 [](const Method& m) { return m.kind == MethodKind::MultiAf; });
  if (multi && resolved_split().n_v < 1) throw ConfigError("egp-multiaf requires a non-empty validation set");
}

SplitSpec ExperimentConfig::resolved_split() const {
  SplitSpec s;
  const std::string& key = preset.empty() ? task : preset;
  if (const TaskPreset* p = find_task_preset(key)) s = p->split;
  if (n_l0) s.n_l0 = *n_l0;
  if (n_v) s.n_v = *n_v;
  if (n_u0) s.n_u0 = *n_u0;
  if (n_t) s.n_t = *n_t;
  return s;
}

double ExperimentConfig::resolved_eta() const {
  if (eta) return *eta;
  const std::string& key = preset.empty() ? task : preset;
  if (const TaskPreset* p = find_task_preset(key)) return p->eta;
  return 1.0;
}

std::vector<KernelSpec> ExperimentConfig::dictionary(double magnitude) const {
  std::vector<KernelSpec> out;
  for (int c = lengthscale_min_exp; c <= lengthscale_max_exp; ++c) {
    out.push_back({KernelKind::Rbf, std::pow(10.0, c), magnitude});
  }
  return out;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["target"] = target;
  j["preset"] = preset;
  std::vector<std::string> ms;
  for (const Method& m : methods) ms.push_back(to_string(m));
  j["methods"] = ms;
  j["features"] = num_features;
  j["lengthscale_min_exp"] = lengthscale_min_exp;
  j["lengthscale_max_exp"] = lengthscale_max_exp;
  j["eta"] = resolved_eta();
  j["iters"] = iters;
  j["seeds"] = n_realizations;
  j["seed"] = seed;
  const SplitSpec s = resolved_split();
  j["n_l0"] = s.n_l0;
  j["n_v"] = s.n_v;
  j["n_u0"] = s.n_u0;
  j["n_t"] = s.n_t;
  std::vector<std::string> rules;
  for (AcquisitionKind k : multiaf_rules) rules.push_back(to_string(k));
  j["multiaf_rules"] = rules;
  return j;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = v.find(',', start);
    const auto item = trim(v.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

long long parse_int(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  errno = 0;
  const long long r = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0) {
    throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + s + "'");
  }
  return r;
}

double parse_real(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double r = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(r)) {
    throw ConfigError("'" + std::string(key) + "' expects a real number, got '" + s + "'");
  }
  return r;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

int parse_count(std::string_view key, std::string_view v) {
  const long long r = parse_int(key, v);
  if (r < 0 || r > 100000000) throw ConfigError("'" + std::string(key) + "' out of range");
  return static_cast<int>(r);
}

}  // namespace

void apply_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "task") {
    cfg.task = std::string(value);
  } else if (key == "target") {
    cfg.target = std::string(value);
  } else if (key == "preset") {
    cfg.preset = std::string(value);
  } else if (key == "method" || key == "methods") {
    std::vector<Method> ms;
    for (const std::string& name : split_list(value)) {
      if (name == "all") {
        ms = all_methods();
        continue;
      }
      const auto m = parse_method(name);
      if (!m) throw ConfigError("unknown method '" + name + "'");
      ms.push_back(*m);
    }
    if (ms.empty()) throw ConfigError("'" + std::string(key) + "' must name at least one method");
    cfg.methods = std::move(ms);
  } else if (key == "features") {
    cfg.num_features = parse_count(key, value);
  } else if (key == "lengthscale_min_exp") {
    cfg.lengthscale_min_exp = static_cast<int>(parse_int(key, value));
  } else if (key == "lengthscale_max_exp") {
    cfg.lengthscale_max_exp = static_cast<int>(parse_int(key, value));
  } else if (key == "eta") {
    cfg.eta = parse_real(key, value);
  } else if (key == "iters") {
    cfg.iters = parse_count(key, value);
  } else if (key == "seeds") {
    cfg.n_realizations = parse_count(key, value);
  } else if (key == "seed") {
    const long long s = parse_int(key, value);
    if (s < 0) throw ConfigError("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "n_l0") {
    cfg.n_l0 = parse_count(key, value);
  } else if (key == "n_v") {
    cfg.n_v = parse_count(key, value);
  } else if (key == "n_u0") {
    cfg.n_u0 = parse_count(key, value);
  } else if (key == "n_t") {
    cfg.n_t = parse_count(key, value);
  } else if (key == "multiaf_rules") {
    std::vector<AcquisitionKind> rules;
    for (const std::string& name : split_list(value)) {
      const auto k = parse_acquisition_kind(name);
      if (!k || *k == AcquisitionKind::SingleGpVar) throw ConfigError("unknown multiaf rule '" + name + "'");
      rules.push_back(*k);
    }
    if (rules.empty()) throw ConfigError("multiaf_rules must name at least one rule");
    cfg.multiaf_rules = std::move(rules);
  } else if (key == "output") {
    cfg.output = std::string(value);
  } else if (key == "record_runtime") {
    cfg.record_runtime = parse_bool(key, value);
  } else if (key == "audit") {
    cfg.audit = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    const std::string_view line = trim(text.substr(start, pos - start));
    start = pos + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    apply_config_value(base, key, line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ConfigError("cannot open config file " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
  std::fclose(f);
  return parse_config(text, std::move(base));
}

// ---------------------------------------------------------------------------
// Task resolution

TaskSource TaskSource::resolve(const ExperimentConfig& cfg) {
  TaskSource src;
  src.name_ = cfg.task;
  if (const Benchmark* b = find_benchmark(cfg.task)) {
    src.bench_ = b;
    return src;
  }
  if (!std::filesystem::exists(cfg.task)) {
    throw ConfigError("task '" + cfg.task + "' is neither a benchmark name nor an existing CSV file");
  }
  if (cfg.target.empty()) throw ConfigError("CSV task requires a target column");
  try {
    src.data_ = load_csv(cfg.task, cfg.target);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  return src;
}

DataPools TaskSource::make_pools(const SplitSpec& split, std::uint64_t seed) const {
  if (bench_) return egpal::make_pools(*bench_, split, seed);
  return egpal::make_pools(*data_, split, seed);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

RealizationSeeds RealizationSeeds::derive(std::uint64_t realization_seed) {
  const std::uint64_t base = splitmix64(realization_seed);
  return {splitmix64(base ^ 1u), splitmix64(base ^ 2u), splitmix64(base ^ 3u)};
}

void AuditReport::check(bool ok, const std::string& what) {
  ++checks;
  if (!ok && violations.size() < 100) violations.push_back(what);
}

// ---------------------------------------------------------------------------
// Active learning loops

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Unlabelled pool with hidden labels; order is preserved on removal so the
/// lowest-index tie-break is stable.
class UnlabeledPool {
 public:
  UnlabeledPool(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) : x_(x), y_(y) {
    ids_.resize(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < ids_.size(); ++i) ids_[i] = static_cast<int>(i);
  }

  [[nodiscard]] const Eigen::MatrixXd& inputs() const { return x_; }
  [[nodiscard]] Eigen::Index size() const { return x_.rows(); }
  [[nodiscard]] int id(Eigen::Index i) const { return ids_[static_cast<std::size_t>(i)]; }

  struct Taken {
    Eigen::VectorXd x;
    double y;
    int id;
  };

  /// Removes point i and reveals its label.
  Taken take(Eigen::Index i) {
    Taken t{x_.row(i).transpose(), y_(i), ids_[static_cast<std::size_t>(i)]};
    const Eigen::Index n = x_.rows();
    const Eigen::Index tail = n - i - 1;
    if (tail > 0) {
      x_.middleRows(i, tail) = x_.bottomRows(tail).eval();
      y_.segment(i, tail) = y_.tail(tail).eval();
    }
    x_.conservativeResize(n - 1, Eigen::NoChange);
    y_.conservativeResize(n - 1);
    ids_.erase(ids_.begin() + i);
    return t;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::vector<int> ids_;
};

void audit_ensemble(AuditReport& audit, const Ensemble& en) {
  const Eigen::VectorXd w = en.weights();
  audit.check(std::abs(w.sum() - 1.0) <= 1e-12, "ensemble weights do not sum to one");
  audit.check((w.array() >= 0.0).all(), "negative ensemble weight");
  for (const GpExpert& e : en.experts()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.sigma(), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    audit.check(lo >= -1e-9 && hi <= e.sigma2_theta() + 1e-9, "posterior covariance eigenvalues out of bounds");
    audit.check(e.sigma() == e.sigma().transpose(), "posterior covariance not symmetric");
  }
}

void audit_scores(AuditReport& audit, const PoolPosterior& post) {
  const Eigen::VectorXd wvar = score_wvar(post).scores;
  const Eigen::VectorXd qbc = score_qbc(post).scores;
  const Eigen::VectorXd gpm = score_gpm_var(post).scores;
  audit.check((gpm - (wvar + qbc)).cwiseAbs().maxCoeff() <= 1e-12, "gpm-var differs from wvar + qbc");
  // Independent law-of-total-variance evaluation. Summation order differs, so
  // the tolerance scales with the magnitude of the score.
  const Eigen::VectorXd consensus = post.consensus();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < post.size(); ++i) {
    double ltv = 0.0;
    for (Eigen::Index m = 0; m < post.num_experts(); ++m) {
      const double dev = post.means(i, m) - consensus(i);
      ltv += post.weights(m) * (post.vars(i, m) + dev * dev);
    }
    worst = std::max(worst, std::abs(ltv - gpm(i)) / std::max(1.0, std::abs(gpm(i))));
  }
  audit.check(worst <= 1e-12, "gpm-var differs from the law of total variance");
  audit.check(score_went(post).scores.allFinite() && score_gpm_ent(post).scores.allFinite() && wvar.allFinite() &&
                  qbc.allFinite(),
              "non-finite acquisition score");
  audit.check((post.vars.array() >= 0.0).all(), "negative predictive variance");
}

Ensemble build_ensemble(const ExperimentConfig& cfg, const DataPools& pools, const HyperparameterFit& fit,
                        const RealizationSeeds& seeds, const RunHooks& hooks) {
  const std::vector<KernelSpec> dict = cfg.dictionary(fit.spec.magnitude);
  Ensemble en = Ensemble::init(dict, cfg.num_features, static_cast<int>(pools.l0_x.cols()), fit.noise_var,
                               seeds.features);
  for (Eigen::Index i = 0; i < pools.l0_x.rows(); ++i) {
    const Eigen::VectorXd x = pools.l0_x.row(i).transpose();
    if (hooks.on_model_update) hooks.on_model_update(x);
    en.update(x, pools.l0_y(i));
  }
  return en;
}

HyperparameterFit fit_initial(const ExperimentConfig& cfg, const DataPools& pools) {
  return fit_hyperparameters(pools.l0_x, pools.l0_y,
                             default_hyperparameter_grids(pools.l0_y, cfg.lengthscale_min_exp, cfg.lengthscale_max_exp));
}

IterationMetrics evaluate(const Ensemble& en, const DataPools& pools, double sigma2_y, int t) {
  IterationMetrics m;
  m.t = t;
  m.nmse = nmse(en.consensus_mean(pools.t_x), pools.t_y, sigma2_y);
  m.npll = npll(en, pools.t_x, pools.t_y);
  return m;
}

IterationMetrics evaluate(const ExactGp& gp, const DataPools& pools, double sigma2_y, int t) {
  IterationMetrics m;
  m.t = t;
  m.nmse = nmse(gp.predict(pools.t_x).means, pools.t_y, sigma2_y);
  m.npll = npll(gp, pools.t_x, pools.t_y);
  return m;
}

void audit_budget(AuditReport& audit, const DataPools& pools, Eigen::Index labeled, const UnlabeledPool& pool,
                  int t) {
  audit.check(labeled == pools.l0_x.rows() + t, "labelled-set size differs from |L_0| + t");
  audit.check(pool.size() == pools.u0_x.rows() - t, "pool size differs from |U_0| - t");
}

}  // namespace

RealizationResult run_single_rule(const ExperimentConfig& cfg, const Method& method, const DataPools& pools,
                                 const RealizationSeeds& seeds, const RunHooks& hooks) {
  if (method.kind == MethodKind::MultiAf) throw ParameterError("run_single_rule takes a single-rule method");
  RealizationResult res;
  res.hyperparameters = fit_initial(cfg, pools);
  const double sigma2_y = label_variance(pools.t_y);
  UnlabeledPool pool(pools.u0_x, pools.u0_y);
  Eigen::Index labeled = pools.l0_x.rows();

  if (method.kind == MethodKind::GpVar) {
    for (Eigen::Index i = 0; i < pools.l0_x.rows(); ++i) {
      if (hooks.on_model_update) hooks.on_model_update(pools.l0_x.row(i).transpose());
    }
    ExactGp gp = ExactGp::fit(pools.l0_x, pools.l0_y, res.hyperparameters.spec, res.hyperparameters.noise_var);
    auto start = Clock::now();
    res.metrics.push_back(evaluate(gp, pools, sigma2_y, 0));
    res.metrics.back().wall_ms = elapsed_ms(start);
    for (int t = 1; t <= cfg.iters; ++t) {
      if (pool.size() == 0) {
        res.truncated = true;
        break;
      }
      start = Clock::now();
      const Eigen::Index idx = score_single_gp_var(gp, pool.inputs()).argmax_index;
      const auto taken = pool.take(idx);
      if (hooks.on_model_update) hooks.on_model_update(taken.x);
      gp = gp.with_point(taken.x, taken.y);
      ++labeled;
      res.queried_ids.push_back(taken.id);
      res.metrics.push_back(evaluate(gp, pools, sigma2_y, t));
      res.metrics.back().wall_ms = elapsed_ms(start);
      if (cfg.audit) {
        audit_budget(res.audit, pools, labeled, pool, t);
        res.audit.check(gp.predict(pool.size() > 0 ? pool.inputs() : pools.t_x).vars.minCoeff() >= 0.0,
                        "negative exact GP variance");
      }
    }
    return res;
  }

  Ensemble en = build_ensemble(cfg, pools, res.hyperparameters, seeds, hooks);
  std::mt19937_64 rng(seeds.selection);
  auto start = Clock::now();
  res.metrics.push_back(evaluate(en, pools, sigma2_y, 0));
  res.metrics.back().wall_ms = elapsed_ms(start);
  if (cfg.audit) audit_ensemble(res.audit, en);

  for (int t = 1; t <= cfg.iters; ++t) {
    if (pool.size() == 0) {
      res.truncated = true;
      break;
    }
    start = Clock::now();
    Eigen::Index idx = 0;
    if (method.kind == MethodKind::Random) {
      std::uniform_int_distribution<Eigen::Index> pick(0, pool.size() - 1);
      idx = pick(rng);
    } else {
      const PoolPosterior post = en.posterior_pool(pool.inputs());
      if (cfg.audit) audit_scores(res.audit, post);
      idx = score(method.af, post).argmax_index;
    }
    const auto taken = pool.take(idx);
    if (hooks.on_model_update) hooks.on_model_update(taken.x);
    en.update(taken.x, taken.y);
    ++labeled;
    res.queried_ids.push_back(taken.id);
    res.metrics.push_back(evaluate(en, pools, sigma2_y, t));
    res.metrics.back().wall_ms = elapsed_ms(start);
    if (cfg.audit) {
      audit_ensemble(res.audit, en);
      audit_budget(res.audit, pools, labeled, pool, t);
    }
  }
  return res;
}

RealizationResult run_multi_rule(const ExperimentConfig& cfg, const DataPools& pools,
                                 const RealizationSeeds& seeds, const RunHooks& hooks) {
  if (pools.v_x.rows() == 0) throw ConfigError("egp-multiaf requires a non-empty validation set");
  RealizationResult res;
  res.hyperparameters = fit_initial(cfg, pools);
  const double sigma2_y = label_variance(pools.t_y);
  UnlabeledPool pool(pools.u0_x, pools.u0_y);
  Eigen::Index labeled = pools.l0_x.rows();

  Ensemble en = build_ensemble(cfg, pools, res.hyperparameters, seeds, hooks);
  AfEnsembleState afs = AfEnsembleState::init(cfg.multiaf_rules, cfg.resolved_eta());
  auto start = Clock::now();
  res.metrics.push_back(evaluate(en, pools, sigma2_y, 0));
  res.metrics.back().wall_ms = elapsed_ms(start);
  if (cfg.audit) audit_ensemble(res.audit, en);

  for (int t = 1; t <= cfg.iters; ++t) {
    if (pool.size() == 0) {
      res.truncated = true;
      break;
    }
    start = Clock::now();
    std::optional<Ensemble> before;
    if (cfg.audit) {
      before = en;
      audit_scores(res.audit, en.posterior_pool(pool.inputs()));
    }
    if (hooks.on_validation_use) hooks.on_validation_use();
    const MultiAfStepRecord rec = multi_af_step(en, afs, pool.inputs(), pools.v_x, pools.v_y);
    if (cfg.audit) {
      res.audit.check(*before == en, "rollouts modified the ensemble state");
      res.audit.check(std::abs(rec.omega.sum() - 1.0) <= 1e-12 && (rec.omega.array() >= 0.0).all(),
                      "rule weights off the simplex");
    }

    AfTraceRecord tr;
    tr.t = t;
    tr.omega = rec.omega;
    tr.validation_errors = rec.validation_errors;
    for (Eigen::Index c : rec.candidates) tr.candidate_ids.push_back(pool.id(c));
    const auto taken = pool.take(rec.chosen);
    tr.chosen_id = taken.id;
    res.af_trace.push_back(std::move(tr));

    if (hooks.on_model_update) hooks.on_model_update(taken.x);
    en.update(taken.x, taken.y);
    ++labeled;
    res.queried_ids.push_back(taken.id);
    res.metrics.push_back(evaluate(en, pools, sigma2_y, t));
    res.metrics.back().wall_ms = elapsed_ms(start);
    if (cfg.audit) {
      audit_ensemble(res.audit, en);
      audit_budget(res.audit, pools, labeled, pool, t);
    }
  }
  return res;
}

Curve aggregate(const std::vector<std::vector<double>>& curves) {
  Curve c;
  if (curves.empty()) return c;
  std::size_t len = curves.front().size();
  for (const auto& v : curves) len = std::min(len, v.size());
  const double n = static_cast<double>(curves.size());
  c.mean.assign(len, 0.0);
  c.stddev.assign(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& v : curves) sum += v[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& v : curves) ss += (v[t] - mean) * (v[t] - mean);
    c.mean[t] = mean;
    c.stddev[t] = curves.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return c;
}

namespace {

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EGPAL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

RunResult run_method(const ExperimentConfig& cfg, const TaskSource& source, const Method& method) {
  const auto start = Clock::now();
  RunResult out;
  out.method = method;
  const auto n = static_cast<std::size_t>(cfg.n_realizations);
  out.realizations.resize(n);
  std::vector<std::exception_ptr> errors(n);
  const SplitSpec split = cfg.resolved_split();

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < n; r = next++) {
      try {
        const std::uint64_t rseed = cfg.seed + r;
        const RealizationSeeds seeds = RealizationSeeds::derive(rseed);
        const DataPools pools = source.make_pools(split, seeds.pools);
        RealizationResult res = method.kind == MethodKind::MultiAf ? run_multi_rule(cfg, pools, seeds)
                                                                   : run_single_rule(cfg, method, pools, seeds);
        res.seed = rseed;
        out.realizations[r] = std::move(res);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const unsigned workers = worker_count(n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::vector<double>> nm, np;
  for (const auto& r : out.realizations) {
    std::vector<double> a, b;
    for (const auto& m : r.metrics) {
      a.push_back(m.nmse);
      b.push_back(m.npll);
    }
    nm.push_back(std::move(a));
    np.push_back(std::move(b));
  }
  out.nmse = aggregate(nm);
  out.npll = aggregate(np);
  out.wall_ms = elapsed_ms(start);
  return out;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TaskSource source = TaskSource::resolve(cfg);
  std::vector<RunResult> out;
  for (const Method& m : cfg.methods) out.push_back(run_method(cfg, source, m));
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<RunResult>& results) {
  out << "iteration,method,seed,nmse,npll\n";
  for (const RunResult& r : results) {
    const std::string name = to_string(r.method);
    for (const RealizationResult& rr : r.realizations) {
      for (const IterationMetrics& m : rr.metrics) {
        out << m.t << ',' << name << ',' << rr.seed << ',' << fmt_real(m.nmse) << ',' << fmt_real(m.npll) << '\n';
      }
    }
  }
}

nlohmann::json summary_json(const ExperimentConfig& cfg, const std::vector<RunResult>& results, double runtime_ms) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["config"] = cfg.to_json();
  nlohmann::json methods = nlohmann::json::array();
  for (const RunResult& r : results) {
    nlohmann::json mj;
    mj["method"] = to_string(r.method);
    mj["nmse_mean"] = r.nmse.mean;
    mj["nmse_std"] = r.nmse.stddev;
    mj["npll_mean"] = r.npll.mean;
    mj["npll_std"] = r.npll.stddev;
    if (cfg.record_runtime) mj["runtime_ms"] = r.wall_ms;
    nlohmann::json reals = nlohmann::json::array();
    for (const RealizationResult& rr : r.realizations) {
      nlohmann::json rj;
      rj["seed"] = rr.seed;
      rj["status"] = rr.truncated ? "truncated" : "ok";
      rj["queried"] = rr.queried_ids;
      rj["hyperparameters"] = {{"lengthscale", rr.hyperparameters.spec.lengthscale},
                               {"magnitude", rr.hyperparameters.spec.magnitude},
                               {"noise_var", rr.hyperparameters.noise_var},
                               {"log_marginal_likelihood", rr.hyperparameters.log_marginal_likelihood}};
      if (!rr.af_trace.empty()) {
        nlohmann::json tj = nlohmann::json::array();
        for (const AfTraceRecord& a : rr.af_trace) {
          tj.push_back({{"t", a.t},
                        {"omega", to_std(a.omega)},
                        {"candidates", a.candidate_ids},
                        {"validation_errors", to_std(a.validation_errors)},
                        {"chosen", a.chosen_id}});
        }
        rj["af_trace"] = std::move(tj);
      }
      if (cfg.audit) rj["audit"] = {{"checks", rr.audit.checks}, {"violations", rr.audit.violations}};
      reals.push_back(std::move(rj));
    }
    mj["realizations"] = std::move(reals);
    methods.push_back(std::move(mj));
  }
  j["methods"] = std::move(methods);
  if (cfg.record_runtime) j["runtime_ms"] = runtime_ms;
  return j;
}

void write_joined_table(std::ostream& out, const std::vector<RunResult>& results) {
  out << "iteration";
  std::size_t len = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string name = to_string(results[i].method);
    out << ',' << name << "_nmse_mean," << name << "_nmse_std," << name << "_npll_mean," << name << "_npll_std";
    len = i == 0 ? results[i].nmse.mean.size() : std::min(len, results[i].nmse.mean.size());
  }
  out << '\n';
  for (std::size_t t = 0; t < len; ++t) {
    out << t;
    for (const RunResult& r : results) {
      out << ',' << fmt_real(r.nmse.mean[t]) << ',' << fmt_real(r.nmse.stddev[t]) << ','
          << fmt_real(r.npll.mean[t]) << ',' << fmt_real(r.npll.stddev[t]);
    }
    out << '\n';
  }
}

}  // namespace egpal
