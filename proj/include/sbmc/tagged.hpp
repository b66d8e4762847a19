#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "sbmc/replaw.hpp"
#include "sbmc/rng.hpp"
#include "sbmc/stats.hpp"

namespace sbmc {

// The tagged leaf: its log-size performs a random walk with the tilted step
// law, and the k-th individual on the spine lives Exp(chi_k^alpha).
struct TaggedPath {
  std::vector<double> log_sizes;    // S_0 .. S_n, S_0 = ln x
  std::vector<double> lifetimes;    // n entries
  std::vector<double> birth_times;  // n + 1 entries, birth_times[0] = 0
};

TaggedPath simulate_tagged_walk(const StepSampler& steps, double alpha, double x, std::size_t n, Stream& rng);

// chi(t) read off the walk's own clock: lifetimes are accumulated until they
// straddle t.
double walk_chi(const StepSampler& steps, double alpha, double x, double t, Stream& rng);

// eta_s = S_{N_s} with N a unit-rate Poisson process. values[0] = 0 and
// values[k] is the level after the k-th jump.
struct CompoundPoissonPath {
  std::vector<double> jump_times;
  std::vector<double> values;
  double horizon = 0.0;

  double at(double s) const;
};

CompoundPoissonPath simulate_eta(const StepSampler& steps, double horizon, Stream& rng);
// Continues the path up to `horizon`; by memorylessness the result has the
// same law as a path simulated to `horizon` directly.
void extend_eta(CompoundPoissonPath& path, const StepSampler& steps, double horizon, Stream& rng);

// chi(t) by the Lamperti time change. Between jumps eta is constant, so the
// additive clock A(s) = int_0^s exp(-alpha eta_u) du is piecewise linear and
// tau = A^{-1}(t x^alpha) is inverted in closed form; chi(t) = x exp(eta_tau).
// alpha = 0 is the identity time change. Throws PathTooShort if A does not
// reach t x^alpha within the path's horizon.
double lamperti_chi(const CompoundPoissonPath& eta, double alpha, double x, double t);
// Simulates eta as far as needed (doubling the horizon) and applies the above.
double lamperti_chi(const StepSampler& steps, double alpha, double x, double t, Stream& rng);

struct FunctionalSample {
  double value = 0.0;
  // Upper bound on the expected neglected tail relative to `value`.
  double truncation_bound = 0.0;
};

// `steps` must outlive the sampler.
//
// Sampler for I = int_0^inf exp(alpha eta_s) ds. The path is followed until
// exp(alpha eta) E[I] <= tail_tol * (accumulated integral); by the Markov
// property at that jump the neglected tail has mean exp(alpha eta) E[I].
// E[I] = 1/kappa(alpha + p0) when that is positive; otherwise a pilot
// estimate is used and bound_is_analytic() reports false.
class ExponentialFunctional {
 public:
  // Throws UnsupportedRegime unless kappa'(p0) > 0 and alpha > 0.
  ExponentialFunctional(const ReproductionLaw& law, const StepSampler& steps, double alpha, double tail_tol,
                        std::uint64_t pilot_seed = 0x91107);

  FunctionalSample operator()(Stream& rng) const;

  double alpha() const { return alpha_; }
  double tail_tol() const { return tail_tol_; }
  double mean_bound() const { return mean_bound_; }
  bool bound_is_analytic() const { return analytic_; }
  double m1() const { return m1_; }

 private:
  FunctionalSample run(Stream& rng, double mean_bound, double tol) const;

  const StepSampler* steps_;
  double alpha_;
  double tail_tol_;
  double m1_;
  double mean_bound_ = 0.0;
  bool analytic_ = false;
};

// A pool of I draws; Y^alpha has the law of I size-biased by 1/I.
struct YPool {
  double alpha = 1.0;
  double m1 = 0.0;
  std::vector<double> functional;  // I samples
  double max_truncation = 0.0;

  // mean of 1/I over the pool, which estimates alpha * m1.
  Estimate normalization() const;
  // Effective sample size of the 1/I weights, as a fraction of the pool.
  double ess_fraction() const;
  // Weight degeneracy below 10% ESS.
  bool flagged() const { return ess_fraction() < 0.1; }

  // Self-normalized estimate of E k(Y) with a delta-method error.
  Estimate expectation(const std::function<double(double)>& k) const;
  // Draws of Y by multinomial resampling with weights 1/I.
  std::vector<double> resample(std::size_t n, Stream& rng) const;
};

// Throws DomainError if n_pool < 1000. Replica i uses stream
// derive_key(seed, i), so the pool does not depend on `threads`.
YPool sample_Y(const ExponentialFunctional& functional, std::size_t n_pool, std::uint64_t seed,
               unsigned threads = 1);

}  // namespace sbmc
