// Acceptance run: every numbered criterion, one verdict line each.
//
//   acceptance                 all criteria
//   acceptance --criterion 7   just one (repeatable)
//   acceptance --scale 0.1     shrink replica counts for a quick look

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sbmc/cli.hpp"
#include "sbmc/suite.hpp"

namespace {

using sbmc::TestReport;
using sbmc::Verdict;

// The command-line tool must report the missing exponent with its own exit code.
TestReport cli_exit_code_check() {
  const char* argv[] = {"sbmc", "solve", "--law", R"({"type":"dirichlet","weights":[1,1],"scale":null})"};
  std::ostringstream out, err;
  const int code = sbmc::cli::run(4, argv, out, err);
  TestReport r;
  r.name = "sbmc solve exits with code 3";
  r.statistic = code;
  r.threshold = sbmc::cli::kNoMalthusianExponent;
  r.detail = "exit code " + std::to_string(code);
  r.verdict = code == sbmc::cli::kNoMalthusianExponent ? Verdict::pass : Verdict::fail;
  return r;
}

int usage() {
  std::cerr << "usage: acceptance [--criterion N]... [--scale X] [--threads T] [--seed S]\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  sbmc::SuiteOptions opts;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (i + 1 >= argc) return usage();
    const std::string value = argv[++i];
    if (arg == "--criterion") {
      ids.push_back(std::atoi(value.c_str()));
    } else if (arg == "--scale") {
      opts.replica_scale = std::atof(value.c_str());
    } else if (arg == "--threads") {
      opts.threads = static_cast<unsigned>(std::atoi(value.c_str()));
    } else if (arg == "--seed") {
      opts.seed = std::strtoull(value.c_str(), nullptr, 10);
    } else {
      return usage();
    }
  }
  if (ids.empty())
    for (int id = 1; id <= sbmc::kCriterionCount; ++id) ids.push_back(id);
  for (int id : ids)
    if (id < 1 || id > sbmc::kCriterionCount) return usage();
  opts.progress = [](const std::string& msg) { std::cout << "     .. " << msg << std::endl; };

  int failed = 0;
  for (int id : ids) {
    auto result = sbmc::run_criterion(id, opts);
    if (id == 18) result.checks.push_back(cli_exit_code_check());
    const bool ok = result.passed();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << 'C' << std::setw(2) << std::setfill('0') << id << std::setfill(' ')
              << ' ' << result.title << "  (" << std::fixed << std::setprecision(1) << result.seconds << " s)"
              << std::defaultfloat << std::setprecision(6) << '\n';
    for (const auto& c : result.checks) {
      std::cout << "       " << std::left << std::setw(15) << sbmc::to_string(c.verdict) << std::right << c.name;
      if (!c.detail.empty()) std::cout << "  " << c.detail;
      std::cout << '\n';
    }
    std::cout.flush();
  }
  std::cout << (ids.size() - failed) << '/' << ids.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
