#include "sbmc/tagged.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbmc/errors.hpp"
#include "sbmc/parallel.hpp"

namespace sbmc {

TaggedPath simulate_tagged_walk(const StepSampler& steps, double alpha, double x, std::size_t n, Stream& rng) {
  if (!(x > 0.0)) throw DomainError("tagged walk: x must be > 0");
  if (!(alpha >= 0.0)) throw DomainError("tagged walk: alpha must be >= 0");
  if (n == 0) throw DomainError("tagged walk: n must be >= 1");
  TaggedPath path;
  path.log_sizes.reserve(n + 1);
  path.lifetimes.reserve(n);
  path.birth_times.reserve(n + 1);
  double s = std::log(x);
  double clock = 0.0;
  path.log_sizes.push_back(s);
  path.birth_times.push_back(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double life = unit_exponential(rng) * std::exp(-alpha * s);
    path.lifetimes.push_back(life);
    clock += life;
    path.birth_times.push_back(clock);
    s += steps(rng);
    path.log_sizes.push_back(s);
  }
  return path;
}

double walk_chi(const StepSampler& steps, double alpha, double x, double t, Stream& rng) {
  if (!(x > 0.0)) throw DomainError("walk_chi: x must be > 0");
  if (!(t >= 0.0)) throw DomainError("walk_chi: t must be >= 0");
  double s = std::log(x);
  double clock = 0.0;
  for (;;) {
    clock += unit_exponential(rng) * std::exp(-alpha * s);
    if (clock > t) return std::exp(s);
    s += steps(rng);
  }
}

double CompoundPoissonPath::at(double s) const {
  if (s < 0.0 || s > horizon) throw PathTooShort("eta evaluated outside its simulated horizon");
  const auto k = std::upper_bound(jump_times.begin(), jump_times.end(), s) - jump_times.begin();
  return values[static_cast<std::size_t>(k)];
}

CompoundPoissonPath simulate_eta(const StepSampler& steps, double horizon, Stream& rng) {
  if (!(horizon > 0.0)) throw DomainError("simulate_eta: horizon must be > 0");
  CompoundPoissonPath path;
  path.values.push_back(0.0);
  extend_eta(path, steps, horizon, rng);
  return path;
}

void extend_eta(CompoundPoissonPath& path, const StepSampler& steps, double horizon, Stream& rng) {
  if (horizon <= path.horizon) return;
  double s = path.horizon;
  for (;;) {
    s += unit_exponential(rng);
    if (s > horizon) break;
    path.jump_times.push_back(s);
    path.values.push_back(path.values.back() + steps(rng));
  }
  path.horizon = horizon;
}

namespace {

// Returns tau-level if reached, nothing otherwise.
std::optional<double> invert_clock(const CompoundPoissonPath& eta, double alpha, double target) {
  double start = 0.0;
  double clock = 0.0;
  for (std::size_t k = 0; k < eta.values.size(); ++k) {
    const double end = k < eta.jump_times.size() ? eta.jump_times[k] : eta.horizon;
    const double rate = std::exp(-alpha * eta.values[k]);
    const double gain = rate * (end - start);
    // Strict inequality: at tau exactly on a jump the level after the jump
    // applies, matching the right-continuous walk clock.
    if (clock + gain > target) return eta.values[k];
    clock += gain;
    start = end;
  }
  return std::nullopt;
}

}  // namespace

double lamperti_chi(const CompoundPoissonPath& eta, double alpha, double x, double t) {
  if (!(x > 0.0)) throw DomainError("lamperti_chi: x must be > 0");
  if (!(t >= 0.0)) throw DomainError("lamperti_chi: t must be >= 0");
  if (!(alpha >= 0.0)) throw DomainError("lamperti_chi: alpha must be >= 0");
  if (alpha == 0.0) return x * std::exp(eta.at(t));
  const double target = t * std::pow(x, alpha);
  if (const auto level = invert_clock(eta, alpha, target)) return x * std::exp(*level);
  throw PathTooShort("lamperti_chi: the additive clock does not reach t x^alpha = " + std::to_string(target) +
                     " within horizon " + std::to_string(eta.horizon));
}

double lamperti_chi(const StepSampler& steps, double alpha, double x, double t, Stream& rng) {
  auto eta = simulate_eta(steps, std::max(8.0, alpha == 0.0 ? t : 0.0), rng);
  for (;;) {
    try {
      return lamperti_chi(eta, alpha, x, t);
    } catch (const PathTooShort&) {
      extend_eta(eta, steps, 2.0 * eta.horizon, rng);
    }
  }
}

// ---------------------------------------------------------------------------

ExponentialFunctional::ExponentialFunctional(const ReproductionLaw& law, const StepSampler& steps, double alpha,
                                             double tail_tol, std::uint64_t pilot_seed)
    : steps_(&steps), alpha_(alpha), tail_tol_(tail_tol) {
  if (!(alpha > 0.0)) throw UnsupportedRegime("the exponential functional needs alpha > 0");
  if (!(tail_tol > 0.0)) throw DomainError("tail_tol must be > 0");
  const double slope = law.kappa_prime(steps.p0());
  if (!(slope > 0.0)) {
    throw UnsupportedRegime("kappa'(p0) = " + std::to_string(slope) +
                            " <= 0: eta has no negative drift and I is not finite");
  }
  m1_ = slope;
  const double q = alpha + steps.p0();
  if (q < law.p_upper() && law.kappa(q) > 0.0) {
    // E exp(alpha eta_s) = exp(-s kappa(alpha + p0)).
    mean_bound_ = 1.0 / law.kappa(q);
    analytic_ = true;
  } else {
    // E[I] may be infinite here; the pilot mean only sets a scale.
    RunningStats pilot;
    for (std::size_t i = 0; i < 2000; ++i) {
      Stream rng(derive_key(pilot_seed, i));
      pilot.add(run(rng, 1.0, 1e-9).value);
    }
    mean_bound_ = 2.0 * pilot.mean();
  }
}

FunctionalSample ExponentialFunctional::run(Stream& rng, double mean_bound, double tol) const {
  double level = 0.0;
  double acc = 0.0;
  for (;;) {
    const double height = std::exp(alpha_ * level);
    acc += height * unit_exponential(rng);
    level += (*steps_)(rng);
    const double tail = std::exp(alpha_ * level) * mean_bound;
    if (tail <= tol * acc) return {acc, tail / acc};
  }
}

FunctionalSample ExponentialFunctional::operator()(Stream& rng) const { return run(rng, mean_bound_, tail_tol_); }

// ---------------------------------------------------------------------------

Estimate YPool::normalization() const {
  RunningStats st;
  for (double v : functional) st.add(1.0 / v);
  return st.estimate();
}

double YPool::ess_fraction() const {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : functional) {
    sum += 1.0 / v;
    sum_sq += 1.0 / (v * v);
  }
  if (sum_sq == 0.0) return 0.0;
  return sum * sum / sum_sq / static_cast<double>(functional.size());
}

Estimate YPool::expectation(const std::function<double(double)>& k) const {
  const std::size_t n = functional.size();
  if (n == 0) throw DomainError("empty Y pool");
  std::vector<double> a(n);
  std::vector<double> w(n);
  double sum_a = 0.0;
  double sum_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 1.0 / functional[i];
    a[i] = k(std::pow(functional[i], 1.0 / alpha)) * w[i];
    if (!std::isfinite(a[i])) throw EvaluationError("test function is not finite on the Y pool", i, functional[i]);
    sum_a += a[i];
    sum_w += w[i];
  }
  const double ratio = sum_a / sum_w;
  const double mean_w = sum_w / static_cast<double>(n);
  RunningStats resid;
  for (std::size_t i = 0; i < n; ++i) resid.add(a[i] - ratio * w[i]);
  const double se = resid.std_dev() / mean_w / std::sqrt(static_cast<double>(n));
  return {ratio, se, n, flagged()};
}

std::vector<double> YPool::resample(std::size_t n, Stream& rng) const {
  std::vector<double> cumulative(functional.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < functional.size(); ++i) {
    acc += 1.0 / functional[i];
    cumulative[i] = acc;
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = open_uniform(rng) * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    out.push_back(std::pow(functional[static_cast<std::size_t>(it - cumulative.begin())], 1.0 / alpha));
  }
  return out;
}

YPool sample_Y(const ExponentialFunctional& functional, std::size_t n_pool, std::uint64_t seed, unsigned threads) {
  if (n_pool < 1000) throw DomainError("sample_Y: the pool needs at least 1000 draws");
  YPool pool;
  pool.alpha = functional.alpha();
  pool.m1 = functional.m1();
  pool.functional.resize(n_pool);
  std::vector<double> bounds(n_pool);
  parallel_for(n_pool, threads, [&](std::size_t i) {
    Stream rng(derive_key(seed, i));
    const auto s = functional(rng);
    pool.functional[i] = s.value;
    bounds[i] = s.truncation_bound;
  });
  pool.max_truncation = *std::max_element(bounds.begin(), bounds.end());
  return pool;
}

}  // namespace sbmc
