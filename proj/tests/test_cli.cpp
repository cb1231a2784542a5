#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ufls/cli.hpp"

namespace fs = std::filesystem;
using ufls::run_cli;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun ufls_cmd(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& rel) { return std::string(UFLS_TEST_DATA) + "/" + rel; }

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ufls_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // small ring case, one stage, short horizon
  std::vector<std::string> base(const std::string& cmd) const {
    return {cmd,   "--case", data("cases/ring3.json"), "-o", dir_.string(), "--set", "milp.n_stages=1",
            "--set", "milp.horizon_s=6", "--set", "scenarios.count=1", "--set", "milp.stage_cap_frac=0.5",
            "--set", "conventional.thresholds_hz=[59.3]", "--set", "conventional.stage_cap_frac=0.5"};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, VersionAsJson) {
  const CliRun r = ufls_cmd({"--version", "--json"});
  EXPECT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(ufls_cmd({"--version"}).code, 0);
  EXPECT_EQ(ufls_cmd({"--help"}).code, 0);
}

TEST_F(Cli, ValidateCase) {
  const CliRun ok = ufls_cmd({"validate-case", data("cases/ieee39.json"), "--json"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(nlohmann::json::parse(ok.out)["buses"], 39);
  EXPECT_EQ(ufls_cmd({"validate-case", (dir_ / "nope.json").string()}).code, 2);
  fs::create_directories(dir_);
  std::ofstream(dir_ / "bad.json") << R"({"buses": []})";
  EXPECT_EQ(ufls_cmd({"validate-case", (dir_ / "bad.json").string()}).code, 2);
}

TEST_F(Cli, UsageErrorsAreValidationErrors) {
  EXPECT_EQ(ufls_cmd({"frobnicate"}).code, 2);
  EXPECT_EQ(ufls_cmd({"simulate"}).code, 2);
  auto args = base("simulate");
  args.insert(args.end(), {"--conventional", "--set", "milp.bogus=1"});
  EXPECT_EQ(ufls_cmd(args).code, 2);
  args = base("simulate");
  args.insert(args.end(), {"--conventional", "--scenario", "5"});
  EXPECT_EQ(ufls_cmd(args).code, 2);
}

TEST_F(Cli, SimulateWritesCsvs) {
  auto args = base("simulate");
  args.push_back("--conventional");
  const CliRun r = ufls_cmd(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(dir_ / "trajectory.csv"), "t,bus,omega_hz,theta_rad,p_shed_pu,p_ufls_pu");
  EXPECT_EQ(first_line(dir_ / "relays.csv"), "t,bus,stage,event");
  EXPECT_EQ(first_line(dir_ / "metrics.csv"), "nadir_hz,tls_pct,dfss_hz");
}

TEST_F(Cli, OptimizeAndReplay) {
  const CliRun r = ufls_cmd(base("optimize"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sol = nlohmann::json::parse(std::ifstream(dir_ / "solution.json"));
  EXPECT_TRUE(sol["status"] == "optimal" || sol["status"] == "feasible");
  auto sim = base("simulate");
  sim.insert(sim.end(), {"--scheme", (dir_ / "scheme.json").string()});
  EXPECT_EQ(ufls_cmd(sim).code, 0);
}

TEST_F(Cli, ExportOnlyWritesModelWithoutSolving) {
  auto args = base("optimize");
  args.insert(args.end(), {"--export", (dir_ / "m.lp").string(), "--export-only"});
  const CliRun r = ufls_cmd(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "m.lp"));
  EXPECT_FALSE(fs::exists(dir_ / "solution.json"));
  auto ex = base("export-model");
  ex.insert(ex.end(), {"--output", (dir_ / "m.mps").string()});
  EXPECT_EQ(ufls_cmd(ex).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "m.mps"));
  ex.back() = (dir_ / "m.txt").string();
  EXPECT_EQ(ufls_cmd(ex).code, 2);
}

TEST_F(Cli, InfeasibleDesignExitsFour) {
  auto args = base("optimize");
  args.insert(args.end(), {"--set", "milp.stage_cap_frac=0.001", "--set", "scenarios.target=0.75"});
  EXPECT_EQ(ufls_cmd(args).code, 4);
}

TEST_F(Cli, FixedThresholdsFromFile) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "thr.json") << R"({"thresholds_hz": [59.4]})";
  auto args = base("optimize");
  args.insert(args.end(), {"--fix-thresholds", (dir_ / "thr.json").string()});
  const CliRun r = ufls_cmd(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = nlohmann::json::parse(std::ifstream(dir_ / "scheme.json"));
  EXPECT_NEAR(s["stages"][0]["threshold_hz"].get<double>(), 59.4, 1e-9);
  std::ofstream(dir_ / "two.json") << R"({"thresholds_hz": [59.4, 59.0]})";
  args.back() = (dir_ / "two.json").string();
  EXPECT_EQ(ufls_cmd(args).code, 2);
}

TEST_F(Cli, EvaluateAndEmptyParetoGrid) {
  auto args = base("evaluate");
  const CliRun r = ufls_cmd(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(dir_ / "report.csv"), "method,nadir_hz,tls_pct,dfss_hz");
  auto par = base("pareto");
  par.insert(par.end(), {"--set", "pareto.g2=[]"});
  EXPECT_EQ(ufls_cmd(par).code, 2);
}

TEST_F(Cli, ParetoWritesCsv) {
  auto par = base("pareto");
  par.insert(par.end(), {"--set", "pareto.g2=[0.2,1]", "--set", "pareto.g3=[1]"});
  const CliRun r = ufls_cmd(par);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(dir_ / "pareto.csv"), "g1,g2,g3,tls_pct,dfss_hz,nadir_hz");
}
