#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sbmc/cli.hpp"
#include "sbmc/config.hpp"
#include "sbmc/errors.hpp"
#include "sbmc/suite.hpp"

namespace sbmc {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sbmc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// CSV rows after the config comment and the header.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  if (!rows.empty()) rows.erase(rows.begin());
  return rows;
}

class CliTest : public testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sbmc_cli_" + std::string(testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string dir(const std::string& sub = "") const { return (dir_ / sub).string(); }

  fs::path dir_;
};

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c;
  c.law = {{"type", "discrete"}, {"components", {{{"prob", 1.0}, {"atoms", {0.5, 0.5, 0.5}}}}}};
  c.alpha = 0.5;
  c.times = {1.0, 2.5};
  c.generations = {3, 4};
  c.seed = 7;
  const nlohmann::json j = c;
  const auto back = config_from_json(j);
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(RunConfigTest, RejectsBadFields) {
  EXPECT_THROW(config_from_json({{"alpha", -1.0}}), ConfigError);
  EXPECT_THROW(config_from_json({{"replicas", -5}}), ConfigError);
  EXPECT_THROW(config_from_json({{"replicas", 0}}), ConfigError);
  EXPECT_THROW(config_from_json({{"seeed", 1}}), ConfigError);
  EXPECT_THROW(config_from_json({{"alpha", "one"}}), ConfigError);
  EXPECT_THROW(config_from_json({{"times", {-1.0}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"law", {{"type", "dirichlet"}, {"weights", {1.0}}}}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::array()), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(RunConfigTest, LawArgument) {
  EXPECT_EQ(parse_law_argument("uniform_binary"), nlohmann::json({{"type", "uniform_binary"}}));
  EXPECT_EQ(parse_law_argument(R"({"type":"deterministic_binary"})")["type"], "deterministic_binary");
  EXPECT_THROW(parse_law_argument("poisson"), ConfigError);
}

TEST_F(CliTest, SolveDeterministicSplit) {
  const auto r = run_cli({"solve", "--law", "deterministic_binary"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["profile"]["p0"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(j["profile"]["m1"].get<double>(), std::log(2.0), 1e-12);
  EXPECT_TRUE(j["profile"]["p_plus"].is_null());
}

TEST_F(CliTest, SolveExtinctionLaw) {
  const nlohmann::json law = laws::extinction();
  const auto r = run_cli({"solve", "--law", law.dump()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(nlohmann::json::parse(r.out)["profile"]["extinction_prob"].get<double>(), 1.0 / 3.0, 1e-12);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli({"solve", "--alpha", "-1"}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({"solve", "--law", "nonsense"}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
  const auto dirichlet = run_cli({"solve", "--law", R"({"type":"dirichlet","weights":[1,1],"scale":1.5})"});
  EXPECT_EQ(dirichlet.code, cli::kNoMalthusianExponent);
  EXPECT_NE(dirichlet.err.find("smallest moment"), std::string::npos);
  EXPECT_EQ(run_cli({"simulate-tree", "--t", "50", "--cap", "100", "--n", "1", "--out-dir", dir()}).code,
            cli::kCapExceeded);
  EXPECT_EQ(run_cli({"simulate-tagged", "--alpha", "0", "--out-dir", dir()}).code, cli::kUnsupportedRegime);
}

TEST_F(CliTest, ConfigFileWithOverrides) {
  fs::create_directories(dir_);
  std::ofstream(dir("cfg.json")) << R"({"law":{"type":"deterministic_binary"},"alpha":2,"seed":5})";
  const auto r = run_cli({"--config", dir("cfg.json"), "solve", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["config"]["alpha"], 2.0);
  EXPECT_EQ(j["config"]["seed"], 9);
  std::ofstream(dir("bad.json")) << R"({"alpha":1,"colour":"red"})";
  EXPECT_EQ(run_cli({"--config", dir("bad.json"), "solve"}).code, cli::kConfigError);
}

TEST_F(CliTest, DeterministicTreeFile) {
  const auto r = run_cli({"simulate-tree", "--law", "deterministic_binary", "--n", "1", "--generations", "2", "--t",
                          "0", "--out-dir", dir()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir("tree_0.jsonl"));
  std::string line;
  std::getline(in, line);
  EXPECT_TRUE(nlohmann::json::parse(line).contains("config"));
  int leaves = 0;
  while (std::getline(in, line)) {
    const auto node = nlohmann::json::parse(line);
    if (node["label"].size() == 2) {
      EXPECT_EQ(node["size"], 0.25);
      ++leaves;
    }
  }
  EXPECT_EQ(leaves, 4);
  const auto rows = csv_rows(dir("generations.csv"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][2], "4");
  EXPECT_EQ(std::stod(rows[0][3]), 1.0);
}

TEST_F(CliTest, ExtinctFractionMatchesGeneratingFunction) {
  // P(extinct by generation n) = F^n(0) for F(u) = 1/4 + 3/4 u^2.
  const nlohmann::json law = laws::extinction();
  const auto r = run_cli({"simulate-tree", "--law", law.dump(), "--n", "4000", "--generations", "12", "--t", "0",
                          "--out-dir", dir()});
  ASSERT_EQ(r.code, 0) << r.err;
  double q = 0.0;
  for (int i = 0; i < 12; ++i) q = 0.25 + 0.75 * q * q;
  const auto summary = nlohmann::json::parse(slurp(dir("tree_summary.json")));
  const auto& ext = summary["generations"][0]["extinct_fraction"];
  EXPECT_NEAR(ext["value"].get<double>(), q, 4.0 * std::sqrt(q * (1 - q) / 4000.0));
}

TEST_F(CliTest, YuleAliveCount) {
  const auto r = run_cli({"simulate-tree", "--law", "deterministic_binary", "--alpha", "0", "--n", "10000", "--t",
                          "2", "--generations", "0", "--out-dir", dir()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = nlohmann::json::parse(slurp(dir("tree_summary.json")));
  const auto& alive = summary["times"][0]["mean_alive"];
  EXPECT_NEAR(alive["value"].get<double>(), std::exp(2.0), 4.0 * alive["std_error"].get<double>());
}

TEST_F(CliTest, TaggedWalkOfTheDeterministicSplit) {
  const auto r = run_cli({"simulate-tagged", "--law", "deterministic_binary", "--n", "20", "--generations", "5",
                          "--t", "1", "--out-dir", dir()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& row : csv_rows(dir("walks.csv"))) {
    EXPECT_NEAR(std::stod(row[2]), -std::stod(row[1]) * std::log(2.0), 1e-12);
  }
  EXPECT_EQ(csv_rows(dir("Y.csv")).size(), 20u);
  EXPECT_EQ(csv_rows(dir("I.csv")).size(), 1000u);
  const auto summary = nlohmann::json::parse(slurp(dir("tagged_summary.json")));
  EXPECT_LE(summary["functional"]["max_truncation_bound"].get<double>(), 1e-6);
}

TEST_F(CliTest, OutputsAreReproducibleAcrossThreadCounts) {
  const std::vector<std::string> base = {"simulate-tree", "--law", "uniform_binary", "--n", "50", "--t", "1", "2",
                                         "--generations", "3"};
  auto a = base;
  a.insert(a.end(), {"--threads", "1", "--out-dir", dir("a")});
  auto b = base;
  b.insert(b.end(), {"--threads", "4", "--out-dir", dir("a")});
  ASSERT_EQ(run_cli(a).code, 0);
  const auto first = slurp(dir("a/times.csv")) + slurp(dir("a/snapshots.csv")) + slurp(dir("a/tree_0.jsonl"));
  ASSERT_EQ(run_cli(b).code, 0);
  // The config line records the thread count; compare everything after it.
  const auto strip = [](const std::string& s) {
    std::string out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line))
      if (line.find("config") == std::string::npos) out += line + '\n';
    return out;
  };
  const auto second = slurp(dir("a/times.csv")) + slurp(dir("a/snapshots.csv")) + slurp(dir("a/tree_0.jsonl"));
  EXPECT_EQ(strip(first), strip(second));
  EXPECT_GT(strip(first).size(), 100u);
}

TEST_F(CliTest, VerifyWritesReports) {
  const auto r = run_cli({"verify", "--no-battery", "--criteria", "1", "18", "--out-dir", dir()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("[PASS]  1"), std::string::npos);
  const auto reports = nlohmann::json::parse(slurp(dir("reports.json")));
  EXPECT_TRUE(reports["ok"].get<bool>());
  EXPECT_EQ(reports["criteria"].size(), 2u);
  const auto csv = slurp(dir("reports.csv"));
  EXPECT_NE(csv.find("name,law,alpha,t,statistic,threshold,verdict,seed"), std::string::npos);
}

}  // namespace
}  // namespace sbmc
