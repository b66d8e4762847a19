#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sbmc/limits.hpp"
#include "sbmc/replaw.hpp"

namespace sbmc {

// Reference laws used throughout the checks.
namespace laws {
// {(0.2, [1.3, 0.5]), (0.8, [0.4])}: one daughter can outgrow her mother.
ReproductionLaw mixed();
// {(0.75, [0.6, 0.6]), (0.25, [])}: extinction probability 1/3.
ReproductionLaw extinction();
}  // namespace laws

struct SuiteOptions {
  std::uint64_t seed = 42;
  unsigned threads = 1;
  double tail_tol = 1e-6;
  double bias_fraction = 0.05;
  std::size_t cap = MarkedTree::kDefaultCap;
  // Multiplies every replica count (1 = the sizes the checks are calibrated for).
  double replica_scale = 1.0;
  // Called with a short message before each heavy step; may be empty.
  std::function<void(const std::string&)> progress;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<TestReport> checks;
  double seconds = 0.0;

  bool passed() const;
};

inline constexpr int kCriterionCount = 18;

std::string criterion_title(int id);

// Runs one of the numbered verification criteria (1..kCriterionCount).
CriterionResult run_criterion(int id, const SuiteOptions& opts);

// Checks that apply to any law with a Malthusian exponent: martingale
// normalization and step, spine identity, step and lifetime laws, Lamperti
// routes, the exponential functional and the limit theorems. Distributional
// limit checks are reported as lattice caveats for lattice laws.
std::vector<TestReport> law_battery(const ReproductionLaw& law, double alpha, const SuiteOptions& opts);

// Plain bisection to |bracket| <= tol; independent of the library's solver.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace sbmc
