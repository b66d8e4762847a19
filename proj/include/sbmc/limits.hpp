#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbmc/measures.hpp"
#include "sbmc/replaw.hpp"
#include "sbmc/stats.hpp"
#include "sbmc/tagged.hpp"
#include "sbmc/tree.hpp"

namespace sbmc {

struct WeightedItem {
  double location = 0.0;
  double weight = 0.0;
};

struct WeightedEmpiricalMeasure {
  std::vector<WeightedItem> items;
  double total_weight = 0.0;

  // sum of weight * k(location).
  double integrate(const std::function<double(double)>& k) const;
};

// sigma_t = sum_i X_i^p0 delta_{t^{1/alpha} X_i}. Throws UnsupportedRegime for
// alpha = 0 and DomainError for t <= 0.
WeightedEmpiricalMeasure sigma_t(const FinitePointMeasure& snapshot, double t, double alpha, double p0);

enum class Verdict { pass, fail, lattice_caveat, skipped };

std::string to_string(Verdict v);

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> p_value;
  std::size_t n_samples = 0;
  Verdict verdict = Verdict::skipped;
  nlohmann::json metadata = nlohmann::json::object();
  std::string detail;

  // A lattice caveat is not a failure.
  bool ok() const { return verdict != Verdict::fail; }
};

void to_json(nlohmann::json& j, const TestReport& r);

// One row per report: name,law,alpha,t,statistic,threshold,verdict,seed.
void write_reports_csv(std::ostream& os, const std::vector<TestReport>& reports);

struct LimitOptions {
  std::uint64_t seed = 42;
  std::size_t replicas = 10'000;
  std::size_t y_pool = 100'000;
  double tail_tol = 1e-6;
  // Finite-t bias budget, as a fraction of the limit's magnitude.
  double bias_fraction = 0.05;
  unsigned threads = 1;
  std::size_t cap = MarkedTree::kDefaultCap;
  // M_inf proxy: M_Q on the stopping line where size^p0 falls to
  // `minf_floor` or the generation reaches `minf_generation`.
  std::size_t minf_generation = 25;
  double minf_floor = 1e-3;
  double lp_exponent = 1.5;
  double lp_threshold = 0.05;
};

// Everything the limit tests share for one (law, alpha): the Malthusian
// profile, the tilted step sampler, the exponential functional and a pool of
// Y draws. Building it costs one Y pool.
class LimitModel {
 public:
  LimitModel(ReproductionLaw law, double alpha, const LimitOptions& opts = {});

  const ReproductionLaw& law() const { return law_; }
  double alpha() const { return alpha_; }
  const MalthusianProfile& profile() const { return profile_; }
  double p0() const { return profile_.p0; }
  const StepSampler& steps() const { return *steps_; }
  const ExponentialFunctional& functional() const { return *functional_; }
  const YPool& y_pool() const { return pool_; }
  const LimitOptions& options() const { return opts_; }

  nlohmann::json metadata() const;

 private:
  ReproductionLaw law_;
  double alpha_;
  LimitOptions opts_;
  MalthusianProfile profile_;
  std::unique_ptr<StepSampler> steps_;
  std::unique_ptr<ExponentialFunctional> functional_;
  YPool pool_;
};

// E <x^p0 k(t^{1/alpha} x), X(t)> from trees against E k(Y) from the pool.
TestReport mean_measure_test(const LimitModel& model, double t, const std::function<double(double)>& k,
                             const std::string& k_name = "k");

// t^{(p-p0)/alpha} E <x^p, X(t)> along t_grid against E Y^{p-p0}. p must lie
// in [p0, p_+); DomainError otherwise (including when p_+ does not exist).
TestReport moment_scaling_test(const LimitModel& model, double p, const std::vector<double>& t_grid);

// Mean of |int k d sigma_t - M_inf E k(Y)|^q along t_grid, q = lp_exponent.
TestReport lp_convergence_test(const LimitModel& model, const std::function<double(double)>& k,
                               const std::vector<double>& t_grid, const std::string& k_name = "k");

// G phi_g(y) for phi_g(y) = exp(-<g, y>). Exact for discrete laws; otherwise a
// Monte Carlo estimate over `budget` draws of the reproduction law.
Estimate generator_apply(const ReproductionLaw& law, double alpha, const std::function<double(double)>& g,
                         const FinitePointMeasure& y, std::size_t budget = 100'000, std::uint64_t seed = 0x6e6);

// (E phi_g(X(h)) - phi_g(y)) / h by direct simulation of N processes from y.
Estimate generator_finite_difference(const ReproductionLaw& law, double alpha,
                                     const std::function<double(double)>& g, const FinitePointMeasure& y, double h,
                                     std::size_t n, std::uint64_t seed, unsigned threads = 1);

// Passes when the asymptotic p-value exceeds `alpha_level`. Throws DomainError on empty input.
TestReport ks_two_sample(const std::vector<double>& a, const std::vector<double>& b, double alpha_level = 0.01);

}  // namespace sbmc
