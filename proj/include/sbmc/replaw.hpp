#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sbmc/measures.hpp"
#include "sbmc/rng.hpp"
#include "sbmc/stats.hpp"

namespace sbmc {

// Reproduction laws: the distribution of the daughters' sizes relative to the
// mother's size. Every built-in variant has closed-form moments.

// Two daughters of size 1/2.
struct DeterministicBinary {};

// Two daughters of sizes U and 1 - U, U uniform on (0, 1).
struct UniformBinary {};

struct MixtureComponent {
  double prob = 0.0;
  std::vector<double> atoms;  // empty = death
};

// Finitely many offspring configurations.
struct DiscreteMixture {
  std::vector<MixtureComponent> components;
};

// Dirichlet(weights) vector multiplied by `scale`. When no scale is given the
// default v(v+1) / sum w_i(w_i+1) with v = sum w_i is used.
struct DirichletScaled {
  std::vector<double> weights;
  std::optional<double> scale;

  double effective_scale() const;
};

class ReproductionLaw {
 public:
  using Variant = std::variant<DeterministicBinary, UniformBinary, DiscreteMixture, DirichletScaled>;

  // Throws InvalidLaw if the parameters are inconsistent.
  explicit ReproductionLaw(Variant v);

  static ReproductionLaw deterministic_binary() { return ReproductionLaw(DeterministicBinary{}); }
  static ReproductionLaw uniform_binary() { return ReproductionLaw(UniformBinary{}); }
  static ReproductionLaw discrete(std::vector<MixtureComponent> components) {
    return ReproductionLaw(DiscreteMixture{std::move(components)});
  }
  static ReproductionLaw dirichlet(std::vector<double> weights, std::optional<double> scale = std::nullopt) {
    return ReproductionLaw(DirichletScaled{std::move(weights), scale});
  }

  const Variant& variant() const { return variant_; }
  std::string name() const;
  bool is_discrete() const { return std::holds_alternative<DiscreteMixture>(variant_) ||
                                    std::holds_alternative<DeterministicBinary>(variant_); }

  // One independent draw; may be empty (death).
  FinitePointMeasure sample(Stream& rng) const;

  // Divergence boundaries of p -> E<x^p, s>: moment(p) is finite exactly on
  // (p_lower, p_upper).
  double p_lower() const;
  double p_upper() const;

  // E<x^p, s>. Throws DomainError outside (p_lower, p_upper).
  double moment(double p) const;
  // 1 - moment(p).
  double kappa(double p) const;
  // d kappa / dp = -E<x^p ln x, s>. Closed form where available, otherwise a
  // Richardson-refined central difference with base step 1e-5.
  double kappa_prime(double p) const;

  // F(u) = E u^{#s}, u in [0, 1].
  double offspring_gf(double u) const;
  // F'(1) = E #s.
  double mean_offspring() const;
  // Probability that a draw is empty.
  double death_probability() const;

  // True when the log-sizes of all atoms lie on a lattice rZ (e.g. the
  // deterministic binary split). Distributional limit theorems need a
  // non-lattice law.
  bool is_lattice() const;

 private:
  Variant variant_;
};

// Monte Carlo estimate of moment(p). Flagged when one draw carries more than
// 1% of the total, a symptom of an infinite-variance integrand.
Estimate moment_monte_carlo(const ReproductionLaw& law, double p, std::size_t budget, Stream& rng);

// Central difference of f at p with Richardson extrapolation (steps h, h/2).
double richardson_derivative(const std::function<double(double)>& f, double p, double h = 1e-5);

struct ExponentSearch {
  double p_cap = 64.0;          // right end of the scan
  std::size_t grid_points = 512;
  double tol = 1e-12;           // |kappa(p0)| target
  double lower_offset = 1e-6;   // first grid point above the scan start
};

struct MalthusianRoot {
  double p0 = 0.0;
  // kappa(p) > 0 somewhere right of p0 on the scan grid.
  bool positive_right_of_root = false;
};

// Smallest positive zero of kappa. The scan covers (max(p_lower, 0), p_cap]
// on a grid geometrically refined towards its left end; the first sign change
// is refined by bracketed secant/bisection. If no grid point has kappa >= 0,
// the maximum of kappa (concave) is located by golden-section search before
// giving up with NoMalthusianExponent, whose payload carries the minimal
// moment.
MalthusianRoot malthusian_exponent(const ReproductionLaw& law, const ExponentSearch& opts = {});

// Second zero of kappa above p0, if kappa changes sign again below p_cap.
std::optional<double> second_root(const ReproductionLaw& law, double p0, const ExponentSearch& opts = {});

// Smallest fixed point of F in [0, 1] by monotone iteration from 0.
double extinction_prob(const ReproductionLaw& law, double tol = 1e-14);

struct MalthusianProfile {
  double p_lower = 0.0;
  double p_upper = 0.0;
  double p0 = 0.0;
  std::optional<double> p_plus;
  double kappa_prime_at_p0 = 0.0;
  double m1 = 0.0;  // |kappa'(p0)|
  double mean_offspring = 0.0;
  double extinction_prob = 0.0;
  bool positive_right_of_root = false;
  // E(M_1^2) with M_1 = <x^p0, s>: exact for discrete laws, Monte Carlo otherwise.
  Estimate second_moment_m1;
};

MalthusianProfile malthusian_profile(const ReproductionLaw& law, const ExponentSearch& opts = {},
                                     std::uint64_t seed = 0x5eed, std::size_t mc_budget = 200000);

// Sampler for the tilted step law: integral of k against it equals
// E<x^p0 k(ln x), s>. Discrete laws are enumerated exactly; continuous laws use
// a weighted-resampling pool.
class StepSampler {
 public:
  struct Item {
    double log_size;
    double weight;
  };

  static constexpr std::size_t kDefaultPool = 1'000'000;

  StepSampler(const ReproductionLaw& law, double p0, std::uint64_t seed,
              std::size_t pool_size = kDefaultPool);

  double operator()(Stream& rng) const;

  double p0() const { return p0_; }
  bool exact() const { return exact_; }
  // |total tilted mass - 1|; for pools, relative to the pool average.
  double normalization_error() const { return normalization_error_; }
  std::span<const Item> items() const { return items_; }

 private:
  double p0_;
  bool exact_;
  double normalization_error_ = 0.0;
  std::vector<Item> items_;
  std::vector<double> cumulative_;
};

void to_json(nlohmann::json& j, const ReproductionLaw& law);
ReproductionLaw law_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const MalthusianProfile& p);

}  // namespace sbmc
