#include "sbmc/replaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sbmc/errors.hpp"

namespace sbmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate(const DiscreteMixture& m) {
  if (m.components.empty()) throw InvalidLaw("discrete law needs at least one component");
  double total = 0.0;
  for (const auto& c : m.components) {
    if (!(c.prob >= 0.0) || !std::isfinite(c.prob)) {
      throw InvalidLaw("discrete law: component probabilities must be finite and >= 0");
    }
    for (double a : c.atoms) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw InvalidLaw("discrete law: atom sizes must be finite and > 0 (use an empty list for death)");
      }
    }
    total += c.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "discrete law: probabilities sum to " << total << ", expected 1";
    throw InvalidLaw(os.str());
  }
}

void validate(const DirichletScaled& d) {
  if (d.weights.size() < 2) throw InvalidLaw("dirichlet law needs at least two weights");
  for (double w : d.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidLaw("dirichlet weights must be finite and > 0");
  }
  if (d.scale && (!(*d.scale > 0.0) || !std::isfinite(*d.scale))) {
    throw InvalidLaw("dirichlet scale must be finite and > 0");
  }
}

// Finds a zero of f on [a, b] given f(a) and f(b) of opposite signs (or one of
// them zero). Brent's method: inverse quadratic / secant steps guarded by
// bisection, run until the bracket is a few ulps wide.
double bracketed_root(const std::function<double(double)>& f, double a, double b, double fa, double fb) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw AmbiguousBracket("root bracket does not straddle zero");
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  for (int iter = 0; iter < 400; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 1e-300;
    const double half = 0.5 * (c - b);
    if (std::abs(half) <= tol || fb == 0.0) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p;
      double q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * half * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * half * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = half;
        e = d;
      }
    } else {
      d = half;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (half > 0.0 ? tol : -tol);
    fb = f(b);
  }
  return b;
}

// Maximizer of a unimodal f on [a, b].
double golden_section_max(const std::function<double(double)>& f, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? x1 : x2;
}

// Among equally good roots within a few ulps, prefer the shortest decimal.
double tidy_root(const std::function<double(double)>& f, double root) {
  const double f_root = std::abs(f(root));
  const double window = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(root));
  for (int digits = 1; digits <= 16; ++digits) {
    std::ostringstream os;
    os.precision(digits);
    os << root;
    const double candidate = std::stod(os.str());
    if (std::abs(candidate - root) <= window && std::abs(f(candidate)) <= f_root) return candidate;
  }
  return root;
}

std::vector<double> scan_grid(double start, const ExponentSearch& opts) {
  if (opts.grid_points < 2) throw DomainError("exponent scan needs at least two grid points");
  if (!(opts.p_cap > start + opts.lower_offset)) throw DomainError("exponent scan cap lies left of the scan start");
  std::vector<double> grid(opts.grid_points);
  const double ratio = (opts.p_cap - start) / opts.lower_offset;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(grid.size() - 1);
    grid[k] = start + opts.lower_offset * std::pow(ratio, frac);
  }
  grid.back() = opts.p_cap;
  return grid;
}

// Continued-fraction check that x is a rational with small denominator.
bool nearly_rational(double x, int max_denominator, double tol) {
  double h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  double r = x;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(r);
    const double h2 = a * h0 + h1;
    const double k2 = a * k0 + k1;
    if (k2 > max_denominator) return false;
    if (std::abs(x - h2 / k2) <= tol * std::max(1.0, std::abs(x))) return true;
    h1 = h0;
    h0 = h2;
    k1 = k0;
    k0 = k2;
    const double frac = r - a;
    if (frac < 1e-15) return true;
    r = 1.0 / frac;
  }
  return false;
}

DiscreteMixture as_mixture(const ReproductionLaw& law) {
  if (std::holds_alternative<DeterministicBinary>(law.variant())) {
    return DiscreteMixture{{{1.0, {0.5, 0.5}}}};
  }
  return std::get<DiscreteMixture>(law.variant());
}

}  // namespace

double DirichletScaled::effective_scale() const {
  if (scale) return *scale;
  double v = 0.0;
  double den = 0.0;
  for (double w : weights) {
    v += w;
    den += w * (w + 1.0);
  }
  return v * (v + 1.0) / den;
}

ReproductionLaw::ReproductionLaw(Variant v) : variant_(std::move(v)) {
  std::visit(Overloaded{[](const DiscreteMixture& m) { validate(m); },
                        [](const DirichletScaled& d) { validate(d); }, [](const auto&) {}},
             variant_);
}

std::string ReproductionLaw::name() const {
  return std::visit(Overloaded{[](const DeterministicBinary&) { return std::string("deterministic_binary"); },
                               [](const UniformBinary&) { return std::string("uniform_binary"); },
                               [](const DiscreteMixture& m) {
                                 // Compact and comma-free so it can sit in a CSV cell.
                                 std::ostringstream os;
                                 os << "discrete{";
                                 for (std::size_t k = 0; k < m.components.size(); ++k) {
                                   os << (k ? " " : "") << m.components[k].prob << ":[";
                                   for (std::size_t i = 0; i < m.components[k].atoms.size(); ++i) {
                                     os << (i ? " " : "") << m.components[k].atoms[i];
                                   }
                                   os << "]";
                                 }
                                 os << "}";
                                 return os.str();
                               },
                               [](const DirichletScaled& d) {
                                 std::ostringstream os;
                                 os << "dirichlet(";
                                 for (std::size_t i = 0; i < d.weights.size(); ++i) os << (i ? " " : "") << d.weights[i];
                                 os << ")x" << d.effective_scale();
                                 return os.str();
                               }},
                    variant_);
}

FinitePointMeasure ReproductionLaw::sample(Stream& rng) const {
  return std::visit(
      Overloaded{
          [](const DeterministicBinary&) { return FinitePointMeasure({0.5, 0.5}); },
          [&](const UniformBinary&) {
            const double u = open_uniform(rng);
            return FinitePointMeasure({u, 1.0 - u});
          },
          [&](const DiscreteMixture& m) {
            const double u = open_uniform(rng);
            double acc = 0.0;
            for (const auto& c : m.components) {
              acc += c.prob;
              if (u < acc) return FinitePointMeasure(c.atoms);
            }
            // Rounding in the cumulative sum: fall back on the last component
            // with positive probability.
            for (auto it = m.components.rbegin(); it != m.components.rend(); ++it) {
              if (it->prob > 0.0) return FinitePointMeasure(it->atoms);
            }
            return FinitePointMeasure();
          },
          [&](const DirichletScaled& d) {
            std::vector<double> g(d.weights.size());
            double total = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
              std::gamma_distribution<double> gamma(d.weights[i], 1.0);
              g[i] = gamma(rng);
              total += g[i];
            }
            const double a = d.effective_scale();
            for (auto& x : g) x = a * x / total;
            return FinitePointMeasure(std::move(g));
          }},
      variant_);
}

double ReproductionLaw::p_lower() const {
  return std::visit(Overloaded{[](const UniformBinary&) { return -1.0; },
                               [](const DirichletScaled& d) {
                                 return -*std::min_element(d.weights.begin(), d.weights.end());
                               },
                               [](const auto&) { return -kInf; }},
                    variant_);
}

double ReproductionLaw::p_upper() const { return kInf; }

double ReproductionLaw::moment(double p) const {
  if (!std::isfinite(p) || !(p > p_lower()) || !(p < p_upper())) {
    std::ostringstream os;
    os << "moment: p = " << p << " outside (" << p_lower() << ", " << p_upper() << ") for " << name();
    throw DomainError(os.str());
  }
  return std::visit(Overloaded{[&](const DeterministicBinary&) { return std::exp2(1.0 - p); },
                               [&](const UniformBinary&) { return 2.0 / (p + 1.0); },
                               [&](const DiscreteMixture& m) {
                                 double total = 0.0;
                                 for (const auto& c : m.components) {
                                   double inner = 0.0;
                                   for (double a : c.atoms) inner += std::pow(a, p);
                                   total += c.prob * inner;
                                 }
                                 return total;
                               },
                               [&](const DirichletScaled& d) {
                                 double v = 0.0;
                                 for (double w : d.weights) v += w;
                                 const double common =
                                     p * std::log(d.effective_scale()) + std::lgamma(v) - std::lgamma(v + p);
                                 double total = 0.0;
                                 for (double w : d.weights) {
                                   total += std::exp(common + std::lgamma(p + w) - std::lgamma(w));
                                 }
                                 return total;
                               }},
                    variant_);
}

double ReproductionLaw::kappa(double p) const { return 1.0 - moment(p); }

double richardson_derivative(const std::function<double(double)>& f, double p, double h) {
  const auto central = [&](double step) { return (f(p + step) - f(p - step)) / (2.0 * step); };
  const double coarse = central(h);
  const double fine = central(h / 2.0);
  return (4.0 * fine - coarse) / 3.0;
}

double ReproductionLaw::kappa_prime(double p) const {
  // Validates the domain.
  (void)moment(p);
  return std::visit(Overloaded{[&](const DeterministicBinary&) { return std::exp2(1.0 - p) * std::numbers::ln2; },
                               [&](const UniformBinary&) { return 2.0 / ((p + 1.0) * (p + 1.0)); },
                               [&](const DiscreteMixture& m) {
                                 double total = 0.0;
                                 for (const auto& c : m.components) {
                                   double inner = 0.0;
                                   for (double a : c.atoms) inner += std::pow(a, p) * std::log(a);
                                   total += c.prob * inner;
                                 }
                                 return -total;
                               },
                               [&](const DirichletScaled&) {
                                 double h = 1e-5;
                                 while (p - h <= p_lower()) h /= 2.0;
                                 return richardson_derivative([this](double q) { return kappa(q); }, p, h);
                               }},
                    variant_);
}

double ReproductionLaw::offspring_gf(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("offspring_gf: u must lie in [0, 1]");
  return std::visit(Overloaded{[&](const DiscreteMixture& m) {
                                 double total = 0.0;
                                 for (const auto& c : m.components) {
                                   total += c.prob * std::pow(u, static_cast<double>(c.atoms.size()));
                                 }
                                 return total;
                               },
                               [&](const DirichletScaled& d) {
                                 return std::pow(u, static_cast<double>(d.weights.size()));
                               },
                               [&](const auto&) { return u * u; }},
                    variant_);
}

double ReproductionLaw::mean_offspring() const {
  return std::visit(Overloaded{[](const DiscreteMixture& m) {
                                 double total = 0.0;
                                 for (const auto& c : m.components) {
                                   total += c.prob * static_cast<double>(c.atoms.size());
                                 }
                                 return total;
                               },
                               [](const DirichletScaled& d) { return static_cast<double>(d.weights.size()); },
                               [](const auto&) { return 2.0; }},
                    variant_);
}

double ReproductionLaw::death_probability() const {
  if (const auto* m = std::get_if<DiscreteMixture>(&variant_)) {
    double total = 0.0;
    for (const auto& c : m->components) {
      if (c.atoms.empty()) total += c.prob;
    }
    return total;
  }
  return 0.0;
}

bool ReproductionLaw::is_lattice() const {
  if (std::holds_alternative<UniformBinary>(variant_) || std::holds_alternative<DirichletScaled>(variant_)) {
    return false;
  }
  const auto mixture = as_mixture(*this);
  std::vector<double> logs;
  for (const auto& c : mixture.components) {
    if (c.prob <= 0.0) continue;
    for (double a : c.atoms) {
      const double l = std::log(a);
      if (std::abs(l) > 1e-14) logs.push_back(l);
    }
  }
  if (logs.empty()) return true;
  for (double l : logs) {
    if (!nearly_rational(l / logs.front(), 1000, 1e-10)) return false;
  }
  return true;
}

Estimate moment_monte_carlo(const ReproductionLaw& law, double p, std::size_t budget, Stream& rng) {
  if (budget == 0) throw DomainError("moment_monte_carlo: budget must be positive");
  RunningStats stats;
  for (std::size_t i = 0; i < budget; ++i) stats.add(power_mass(law.sample(rng), p));
  Estimate out = stats.estimate();
  out.flagged = !std::isfinite(out.std_error) || (budget >= 100 && stats.max_share() > 0.01);
  return out;
}

MalthusianRoot malthusian_exponent(const ReproductionLaw& law, const ExponentSearch& opts) {
  if (!(opts.tol > 0.0)) throw DomainError("malthusian_exponent: tolerance must be positive");
  const double start = std::max(law.p_lower(), 0.0);
  const auto grid = scan_grid(start, opts);
  const std::function<double(double)> kappa = [&law](double p) { return law.kappa(p); };

  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    values[k] = kappa(grid[k]);
    if (std::isnan(values[k])) throw DomainError("malthusian_exponent: kappa is NaN on the scan grid");
  }
  if (values.front() >= 0.0) {
    throw NoMalthusianExponent(
        "kappa is already nonnegative at the left end of the scan, so no positive Malthusian exponent exists",
        1.0 - values.front(), grid.front());
  }

  double lo = 0.0;
  double hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  std::size_t hi_index = grid.size();
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (values[k] < 0.0 && values[k + 1] >= 0.0) {
      lo = grid[k];
      hi = grid[k + 1];
      f_lo = values[k];
      f_hi = values[k + 1];
      hi_index = k + 1;
      break;
    }
  }
  if (hi_index == grid.size()) {
    // Every grid value is negative. kappa is concave, so a positive excursion
    // narrower than the grid spacing sits next to the largest grid value.
    const auto best = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    const double a = grid[best == 0 ? 0 : best - 1];
    const double b = grid[std::min(best + 1, grid.size() - 1)];
    const double argmax = golden_section_max(kappa, a, b);
    const double peak = std::max(kappa(argmax), values[best]);
    const double where = kappa(argmax) >= values[best] ? argmax : grid[best];
    if (peak < 0.0) {
      std::ostringstream os;
      os.precision(6);
      os << "kappa < 0 on the whole scan (" << grid.front() << ", " << opts.p_cap << "]; minimal moment "
         << 1.0 - peak << " at p = " << where;
      throw NoMalthusianExponent(os.str(), 1.0 - peak, where);
    }
    lo = a;
    f_lo = kappa(a);
    hi = where;
    f_hi = peak;
    hi_index = best;
  }

  double p0 = bracketed_root(kappa, lo, hi, f_lo, f_hi);
  p0 = tidy_root(kappa, p0);
  if (!(std::abs(kappa(p0)) < opts.tol)) {
    throw AmbiguousBracket("malthusian_exponent: bracket collapsed without reaching |kappa| < tol");
  }

  MalthusianRoot out;
  out.p0 = p0;
  for (std::size_t k = hi_index; k < grid.size(); ++k) {
    if (grid[k] > p0 && values[k] > 0.0) {
      out.positive_right_of_root = true;
      break;
    }
  }
  if (!out.positive_right_of_root && hi_index < grid.size()) {
    const double b = grid[std::min(hi_index + 1, grid.size() - 1)];
    if (b > p0) out.positive_right_of_root = kappa(golden_section_max(kappa, p0, b)) > 0.0;
  }
  return out;
}

std::optional<double> second_root(const ReproductionLaw& law, double p0, const ExponentSearch& opts) {
  if (!(opts.p_cap > p0)) return std::nullopt;
  ExponentSearch from_root = opts;
  const auto grid = scan_grid(p0, from_root);
  const std::function<double(double)> kappa = [&law](double p) { return law.kappa(p); };

  std::size_t k = 0;
  while (k < grid.size() && !(kappa(grid[k]) > 0.0)) ++k;
  if (k == grid.size()) return std::nullopt;
  double prev = grid[k];
  double f_prev = kappa(prev);
  for (++k; k < grid.size(); ++k) {
    const double f = kappa(grid[k]);
    if (f <= 0.0) {
      return tidy_root(kappa, bracketed_root(kappa, prev, grid[k], f_prev, f));
    }
    prev = grid[k];
    f_prev = f;
  }
  return std::nullopt;
}

double extinction_prob(const ReproductionLaw& law, double tol) {
  const double death = law.death_probability();
  if (death == 0.0) return 0.0;
  // A (sub)critical Galton-Watson process with a positive death probability
  // dies out almost surely; the monotone iteration would only converge like 1/k.
  if (law.mean_offspring() <= 1.0) return 1.0;
  double q = 0.0;
  for (int iter = 0; iter < 10'000'000; ++iter) {
    const double next = law.offspring_gf(q);
    if (std::abs(next - q) < tol) return next;
    q = next;
  }
  return q;
}

MalthusianProfile malthusian_profile(const ReproductionLaw& law, const ExponentSearch& opts, std::uint64_t seed,
                                     std::size_t mc_budget) {
  MalthusianProfile out;
  out.p_lower = law.p_lower();
  out.p_upper = law.p_upper();
  const auto root = malthusian_exponent(law, opts);
  out.p0 = root.p0;
  out.positive_right_of_root = root.positive_right_of_root;
  out.p_plus = second_root(law, root.p0, opts);
  out.kappa_prime_at_p0 = law.kappa_prime(root.p0);
  out.m1 = std::abs(out.kappa_prime_at_p0);
  out.mean_offspring = law.mean_offspring();
  out.extinction_prob = extinction_prob(law);

  if (law.is_discrete()) {
    const auto mixture = as_mixture(law);
    double total = 0.0;
    for (const auto& c : mixture.components) {
      double m = 0.0;
      for (double a : c.atoms) m += std::pow(a, root.p0);
      total += c.prob * m * m;
    }
    out.second_moment_m1 = {total, 0.0, 0, false};
  } else {
    Stream rng(derive_key(seed, substream::kPool));
    RunningStats stats;
    for (std::size_t i = 0; i < mc_budget; ++i) {
      const double m = power_mass(law.sample(rng), root.p0);
      stats.add(m * m);
    }
    out.second_moment_m1 = stats.estimate();
    out.second_moment_m1.flagged = stats.max_share() > 0.01;
  }
  return out;
}

StepSampler::StepSampler(const ReproductionLaw& law, double p0, std::uint64_t seed, std::size_t pool_size)
    : p0_(p0), exact_(law.is_discrete()) {
  if (exact_) {
    const auto mixture = as_mixture(law);
    double total = 0.0;
    for (const auto& c : mixture.components) {
      for (double a : c.atoms) {
        const double w = c.prob * std::pow(a, p0);
        if (w > 0.0) items_.push_back({std::log(a), w});
        total += w;
      }
    }
    normalization_error_ = std::abs(total - 1.0);
    if (normalization_error_ > 1e-9) {
      std::ostringstream os;
      os.precision(12);
      os << "step law mass is " << total << " at p0 = " << p0 << "; p0 is not a root of kappa";
      throw InconsistentExponent(os.str());
    }
  } else {
    if (pool_size == 0) throw DomainError("StepSampler: pool size must be positive");
    Stream rng(derive_key(seed, substream::kPool));
    double total = 0.0;
    items_.reserve(2 * pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) {
      const FinitePointMeasure draw = law.sample(rng);
      for (double a : draw.atoms()) {
        const double w = std::pow(a, p0);
        items_.push_back({std::log(a), w});
        total += w;
      }
    }
    normalization_error_ = std::abs(total / static_cast<double>(pool_size) - 1.0);
    if (normalization_error_ > 0.05) {
      std::ostringstream os;
      os << "step law pool averages " << total / static_cast<double>(pool_size) << " at p0 = " << p0
         << "; p0 is not a root of kappa";
      throw InconsistentExponent(os.str());
    }
  }
  cumulative_.resize(items_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    acc += items_[i].weight;
    cumulative_[i] = acc;
  }
}

double StepSampler::operator()(Stream& rng) const {
  const double u = open_uniform(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return items_[static_cast<std::size_t>(it - cumulative_.begin())].log_size;
}

void to_json(nlohmann::json& j, const ReproductionLaw& law) {
  std::visit(Overloaded{[&](const DeterministicBinary&) { j = {{"type", "deterministic_binary"}}; },
                        [&](const UniformBinary&) { j = {{"type", "uniform_binary"}}; },
                        [&](const DiscreteMixture& m) {
                          auto comps = nlohmann::json::array();
                          for (const auto& c : m.components) comps.push_back({{"prob", c.prob}, {"atoms", c.atoms}});
                          j = {{"type", "discrete"}, {"components", comps}};
                        },
                        [&](const DirichletScaled& d) {
                          j = {{"type", "dirichlet"}, {"weights", d.weights}};
                          j["scale"] = d.scale ? nlohmann::json(*d.scale) : nlohmann::json(nullptr);
                        }},
             law.variant());
}

ReproductionLaw law_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "deterministic_binary") return ReproductionLaw::deterministic_binary();
    if (type == "uniform_binary") return ReproductionLaw::uniform_binary();
    if (type == "discrete") {
      std::vector<MixtureComponent> comps;
      for (const auto& c : j.at("components")) {
        comps.push_back({c.at("prob").get<double>(), c.at("atoms").get<std::vector<double>>()});
      }
      return ReproductionLaw::discrete(std::move(comps));
    }
    if (type == "dirichlet") {
      std::optional<double> scale;
      if (j.contains("scale") && !j.at("scale").is_null()) scale = j.at("scale").get<double>();
      return ReproductionLaw::dirichlet(j.at("weights").get<std::vector<double>>(), scale);
    }
    throw InvalidLaw("unknown law type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidLaw(std::string("malformed law spec: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const MalthusianProfile& p) {
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = {{"p_lower", finite_or_null(p.p_lower)},
       {"p_upper", finite_or_null(p.p_upper)},
       {"p0", p.p0},
       {"p_plus", p.p_plus ? nlohmann::json(*p.p_plus) : nlohmann::json(nullptr)},
       {"kappa_prime_p0", p.kappa_prime_at_p0},
       {"m1", p.m1},
       {"mean_offspring", p.mean_offspring},
       {"extinction_prob", p.extinction_prob},
       {"kappa_positive_right_of_p0", p.positive_right_of_root},
       {"second_moment_m1", {{"value", p.second_moment_m1.value},
                             {"std_error", p.second_moment_m1.std_error},
                             {"flagged", p.second_moment_m1.flagged}}}};
}

}  // namespace sbmc
