#include "egpal/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "egpal/errors.hpp"
#include "egpal/experiment.hpp"

namespace egpal {

namespace {

/// Experiment flags, each mapped onto a config key so that command-line
/// values override config-file values through the same parser.
struct ExperimentFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> options;
  bool no_runtime = false;
  bool audit = false;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(app->add_option(flag, values[key], help), key);
  }

  void bind(CLI::App* app, bool with_method) {
    app->add_option("--config", config_path, "flat key = value config file");
    add(app, "--task", "task", "benchmark name or CSV path");
    add(app, "--target", "target", "label column of a CSV task");
    add(app, "--preset", "preset", "split/eta preset name (defaults to the task name)");
    if (with_method) {
      add(app, "--method", "method", "method name");
    }
    add(app, "--methods", "methods", "comma-separated method list, or 'all'");
    add(app, "--features", "features", "random features per expert (D)");
    add(app, "--ls-min-exp", "lengthscale_min_exp", "smallest dictionary lengthscale exponent");
    add(app, "--ls-max-exp", "lengthscale_max_exp", "largest dictionary lengthscale exponent");
    add(app, "--eta", "eta", "rule-weight learning rate");
    add(app, "--iters", "iters", "number of queries T");
    add(app, "--seeds", "seeds", "number of realizations");
    add(app, "--seed", "seed", "base seed");
    add(app, "--n-l0", "n_l0", "initial labelled set size");
    add(app, "--n-v", "n_v", "validation set size");
    add(app, "--n-u0", "n_u0", "unlabelled pool size");
    add(app, "--n-t", "n_t", "test set size");
    add(app, "--rules", "multiaf_rules", "rules combined by egp-multiaf");
    add(app, "--out", "output", "output path prefix");
    app->add_flag("--no-runtime", no_runtime, "omit wall-clock fields so output files are reproducible");
    app->add_flag("--audit", audit, "check model invariants every iteration");
  }

  [[nodiscard]] ExperimentConfig resolve(ExperimentConfig base = {}) const {
    ExperimentConfig cfg = config_path.empty() ? std::move(base) : load_config(config_path, std::move(base));
    for (const auto& [opt, key] : options) {
      if (opt->count() > 0) apply_config_value(cfg, key, values.at(key));
    }
    if (no_runtime) cfg.record_runtime = false;
    if (audit) cfg.audit = true;
    return cfg;
  }
};

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

void write_outputs(const ExperimentConfig& cfg, const std::vector<RunResult>& results, double runtime_ms,
                   bool joined, std::ostream& out) {
  const std::filesystem::path csv = cfg.output + ".csv";
  const std::filesystem::path json = cfg.output + ".json";
  ensure_parent(csv);
  {
    std::ofstream f(csv, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + csv.string());
    write_results_csv(f, results);
  }
  {
    std::ofstream f(json, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + json.string());
    f << summary_json(cfg, results, runtime_ms).dump(2) << '\n';
  }
  out << "wrote " << csv.string() << " and " << json.string() << '\n';
  if (joined) {
    const std::filesystem::path table = cfg.output + "_table.csv";
    std::ofstream f(table, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + table.string());
    write_joined_table(f, results);
    out << "wrote " << table.string() << '\n';
  }
}

void print_final(const std::vector<RunResult>& results, std::ostream& out) {
  out << std::left << std::setw(14) << "method" << std::right << std::setw(14) << "final_nmse" << std::setw(12)
      << "std" << std::setw(14) << "final_npll" << std::setw(12) << "std" << '\n';
  for (const RunResult& r : results) {
    if (r.nmse.mean.empty()) continue;
    out << std::left << std::setw(14) << to_string(r.method) << std::right << std::setprecision(5) << std::setw(14)
        << r.nmse.mean.back() << std::setw(12) << r.nmse.stddev.back() << std::setw(14) << r.npll.mean.back()
        << std::setw(12) << r.npll.stddev.back() << '\n';
  }
}

int run_command(const ExperimentConfig& cfg, bool joined, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<RunResult> results = run_experiment(cfg);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  for (const RunResult& r : results) {
    for (const RealizationResult& rr : r.realizations) {
      if (rr.truncated) {
        err << "warning: " << to_string(r.method) << " seed " << rr.seed << " exhausted the pool after "
            << rr.queried_ids.size() << " queries\n";
      }
      for (const std::string& v : rr.audit.violations) {
        err << "audit: " << to_string(r.method) << " seed " << rr.seed << ": " << v << '\n';
      }
    }
  }
  write_outputs(cfg, results, ms, joined, out);
  print_final(results, out);
  return kExitOk;
}

int fit_command(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const TaskSource source = TaskSource::resolve(cfg);
  const RealizationSeeds seeds = RealizationSeeds::derive(cfg.seed);
  const DataPools pools = source.make_pools(cfg.resolved_split(), seeds.pools);
  const HyperparameterGrids grids =
      default_hyperparameter_grids(pools.l0_y, cfg.lengthscale_min_exp, cfg.lengthscale_max_exp);
  const HyperparameterFit fit = fit_hyperparameters(pools.l0_x, pools.l0_y, grids);

  nlohmann::json j;
  j["task"] = cfg.task;
  j["seed"] = cfg.seed;
  j["n_l0"] = pools.l0_x.rows();
  j["dim"] = pools.l0_x.cols();
  j["label_mean"] = pools.standardizer.label_mean;
  j["selected"] = {{"lengthscale", fit.spec.lengthscale},
                   {"magnitude", fit.spec.magnitude},
                   {"noise_var", fit.noise_var},
                   {"log_marginal_likelihood", fit.log_marginal_likelihood}};
  nlohmann::json per_ls = nlohmann::json::array();
  for (double l : grids.lengthscales) {
    HyperparameterGrids one = grids;
    one.lengthscales = {l};
    try {
      const HyperparameterFit f = fit_hyperparameters(pools.l0_x, pools.l0_y, one);
      per_ls.push_back({{"lengthscale", l},
                        {"magnitude", f.spec.magnitude},
                        {"noise_var", f.noise_var},
                        {"log_marginal_likelihood", f.log_marginal_likelihood}});
    } catch (const FitError&) {
      per_ls.push_back({{"lengthscale", l}, {"log_marginal_likelihood", nullptr}});
    }
  }
  j["best_per_lengthscale"] = std::move(per_ls);
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active learning with weighted ensembles of random-feature Gaussian processes", "egpal"};
  app.require_subcommand(1);

  ExperimentFlags run_flags, compare_flags, fit_flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment and write CSV + JSON results");
  run_flags.bind(run, true);
  CLI::App* compare = app.add_subcommand("compare", "run a set of methods and emit a joined table");
  compare_flags.bind(compare, false);
  CLI::App* list = app.add_subcommand("list-benchmarks", "print the synthetic benchmark names");
  CLI::App* fit = app.add_subcommand("fit", "report the marginal-likelihood hyperparameter fit on L_0");
  fit_flags.bind(fit, false);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (list->parsed()) {
      for (const Benchmark& b : benchmarks()) out << b.name << '\n';
      return kExitOk;
    }
    if (run->parsed()) {
      return run_command(run_flags.resolve(), false, out, err);
    }
    if (compare->parsed()) {
      ExperimentConfig base;
      base.methods = all_methods();
      return run_command(compare_flags.resolve(std::move(base)), true, out, err);
    }
    if (fit->parsed()) {
      return fit_command(fit_flags.resolve(), out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace egpal
