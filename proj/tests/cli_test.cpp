#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "egpal/cli.hpp"

using namespace egpal;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const char* base = std::getenv("EGPAL_TEST_DATA");
  std::filesystem::path dir = base ? base : std::filesystem::temp_directory_path();
  dir /= "cli_scratch";
  std::filesystem::create_directories(dir);
  return dir / name;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "egpal");
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Cli, ListBenchmarks) {
  const CliResult r = cli({"list-benchmarks"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "ackley5d\nbranin\ncurrin\ngramacy\nhigdon\n");
}

TEST(Cli, RunWritesOneRowPerIterationAndSeed) {
  const std::string out = scratch("run93").string();
  const CliResult r = cli({"run", "--task", "gramacy", "--method", "egp-wvar", "--iters", "30", "--seeds", "3", "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(out + ".csv");
  EXPECT_EQ(count_lines(csv), 1 + 93);
  const nlohmann::json j = nlohmann::json::parse(slurp(out + ".json"));
  EXPECT_EQ(j["config"]["task"], "gramacy");
  EXPECT_EQ(j["methods"][0]["method"], "egp-wvar");
  EXPECT_EQ(j["methods"][0]["nmse_mean"].size(), 31u);
  EXPECT_EQ(j["methods"][0]["realizations"].size(), 3u);
  EXPECT_TRUE(j.contains("runtime_ms"));
}

TEST(Cli, NoRuntimeGivesIdenticalFiles) {
  const std::string a = scratch("det_a").string(), b = scratch("det_b").string();
  for (const std::string& out : {a, b}) {
    const CliResult r = cli({"run", "--task", "higdon", "--methods", "egp-qbc,egp-multiaf", "--iters", "5", "--seeds", "2",
                       "--features", "10", "--no-runtime", "--out", out});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  EXPECT_EQ(slurp(a + ".csv"), slurp(b + ".csv"));
  EXPECT_EQ(slurp(a + ".json"), slurp(b + ".json"));
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const std::filesystem::path cfg = scratch("ok.cfg");
  std::ofstream(cfg) << "task = branin\nmethod = random\niters = 4\nseeds = 1\n";
  const std::string out = scratch("cfgrun").string();
  const CliResult r = cli({"run", "--config", cfg.string(), "--iters", "2", "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(slurp(out + ".csv")), 1 + 3);
  EXPECT_NE(slurp(out + ".csv").find(",random,"), std::string::npos);
}

TEST(Cli, CompareWritesJoinedTable) {
  const std::string out = scratch("cmp").string();
  const CliResult r = cli({"compare", "--task", "higdon", "--methods", "gp-var,egp-wvar", "--iters", "3", "--seeds", "1",
                     "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string table = slurp(out + "_table.csv");
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "iteration,gp-var_nmse_mean,gp-var_nmse_std,gp-var_npll_mean,gp-var_npll_std,"
            "egp-wvar_nmse_mean,egp-wvar_nmse_std,egp-wvar_npll_mean,egp-wvar_npll_std");
  EXPECT_EQ(count_lines(table), 1 + 4);
}

TEST(Cli, FitReport) {
  const CliResult r = cli({"fit", "--task", "currin", "--seed", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n_l0"], 10);
  EXPECT_EQ(j["best_per_lengthscale"].size(), 11u);
  EXPECT_GT(j["selected"]["lengthscale"].get<double>(), 0.0);
}

TEST(Cli, UsageAndConfigErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--iters", "abc"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--method", "nope", "--out", scratch("x").string()}).code, kExitUsage);
  const std::filesystem::path bad = scratch("bad.cfg");
  std::ofstream(bad) << "task = gramacy\nthis line is malformed\n";
  const CliResult r = cli({"run", "--config", bad.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"run", "--config", scratch("missing.cfg").string()}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--task", "gramacy", "--seeds", "0"}).code, kExitUsage);
}

TEST(Cli, CsvTask) {
  const std::filesystem::path data = scratch("toy.csv");
  {
    std::ofstream f(data);
    f << "a,b,label\n";
    for (int i = 0; i < 120; ++i) f << i * 0.1 << ',' << (i % 7) * 0.3 << ',' << std::sin(i * 0.1) << '\n';
  }
  const std::string out = scratch("csvrun").string();
  const CliResult r = cli({"run", "--task", data.string(), "--target", "label", "--method", "egp-went", "--iters", "3",
                     "--seeds", "1", "--n-u0", "50", "--n-t", "20", "--n-v", "10", "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(slurp(out + ".csv")), 1 + 4);
  EXPECT_EQ(cli({"run", "--task", data.string(), "--out", out}).code, kExitUsage);  // no target
}
