#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sbmc {

// Monte Carlo estimate with its standard error. `flagged` marks estimates
// whose error bar should not be trusted (e.g. a single draw dominating).
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  bool flagged = false;
};

// Welford accumulator; mergeable so replica loops can reduce in index order.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
    max_abs_ = std::max(max_abs_, std::abs(x));
    sum_abs_ += std::abs(x);
  }

  void merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_dev() const { return std::sqrt(variance()); }
  double std_error() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  // Largest share of sum |x| carried by a single draw.
  double max_share() const { return sum_abs_ > 0.0 ? max_abs_ / sum_abs_ : 0.0; }
  Estimate estimate() const { return {mean_, std_error(), n_, false}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double max_abs_ = 0.0;
  double sum_abs_ = 0.0;
};

// Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value
// (Stephens' small-sample correction on the effective size). Ties across the
// samples are handled by stepping both empirical CDFs past equal values.
KsResult ks_two_sample_statistic(std::span<const double> a, std::span<const double> b);

// sup |F_n - F| against a continuous reference CDF.
double ks_distance_to_cdf(std::span<const double> samples, const std::function<double(double)>& cdf);

double lag1_autocorrelation(std::span<const double> xs);

// Root-sum-square of standard errors, for differences of independent estimates.
inline double combined_error(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace sbmc
