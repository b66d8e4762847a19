#include "sbmc/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sbmc/errors.hpp"
#include "sbmc/parallel.hpp"
#include "sbmc/tagged.hpp"
#include "sbmc/tree.hpp"

namespace sbmc {

namespace laws {

ReproductionLaw mixed() { return ReproductionLaw::discrete({{0.2, {1.3, 0.5}}, {0.8, {0.4}}}); }

ReproductionLaw extinction() { return ReproductionLaw::discrete({{0.75, {0.6, 0.6}}, {0.25, {}}}); }

}  // namespace laws

bool CriterionResult::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const TestReport& r) { return r.ok(); });
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo);
  if ((flo < 0.0) == (f(hi) < 0.0)) throw DomainError("bisect: no sign change on the bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Standard errors below this are rounding noise (e.g. M_n of a conservative
// law), so 4 sigma never shrinks under 4e-12.
constexpr double kSigmaFloor = 1e-12;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(8);
  os << x;
  return os.str();
}

std::size_t scaled(std::size_t n, const SuiteOptions& o) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * o.replica_scale)));
}

void note(const SuiteOptions& o, const std::string& msg) {
  if (o.progress) o.progress(msg);
}

template <class T, class F>
std::vector<T> collect(std::size_t n, unsigned threads, F&& f) {
  std::vector<T> out(n);
  parallel_for(n, threads, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

Estimate mean_of(const std::vector<double>& xs) {
  RunningStats st;
  for (double x : xs) st.add(x);
  return st.estimate();
}

nlohmann::json meta(const ReproductionLaw& law, std::uint64_t seed) { return {{"law", law.name()}, {"seed", seed}}; }

TestReport finish(TestReport r, bool ok) {
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  return r;
}

// |estimate - target| <= k sigma.
TestReport within_sigma(std::string name, const Estimate& est, double target, double target_se,
                        nlohmann::json m, double k = 4.0) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = std::abs(est.value - target);
  r.threshold = k * std::max(combined_error(est.std_error, target_se), kSigmaFloor);
  r.n_samples = est.n;
  r.metadata = std::move(m);
  r.metadata["estimate"] = est.value;
  r.metadata["std_error"] = est.std_error;
  r.metadata["target"] = target;
  r.detail = fmt(est.value) + " +- " + fmt(est.std_error) + " vs " + fmt(target);
  return finish(std::move(r), r.statistic <= r.threshold);
}

TestReport exact_match(std::string name, double value, double target, double tol, nlohmann::json m) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = std::abs(value - target);
  r.threshold = tol;
  r.n_samples = 1;
  r.metadata = std::move(m);
  r.metadata["value"] = value;
  r.metadata["target"] = target;
  r.detail = fmt(value) + " vs " + fmt(target);
  return finish(std::move(r), r.statistic <= tol);
}

// value < threshold.
TestReport below(std::string name, double value, double threshold, std::size_t n, nlohmann::json m,
                 std::string detail = {}) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = value;
  r.threshold = threshold;
  r.n_samples = n;
  r.metadata = std::move(m);
  r.detail = detail.empty() ? fmt(value) + " < " + fmt(threshold) : std::move(detail);
  return finish(std::move(r), value < threshold);
}

TestReport ks_check(std::string name, const std::vector<double>& a, const std::vector<double>& b, nlohmann::json m) {
  TestReport r = ks_two_sample(a, b, 0.01);
  r.name = std::move(name);
  for (auto& [k, v] : m.items()) r.metadata[k] = v;
  return r;
}

double quantize(double x) { return std::round(x * 1e12) / 1e12; }

TestReport lattice_routed(TestReport r, const ReproductionLaw& law) {
  if (law.is_lattice()) r.verdict = Verdict::lattice_caveat;
  return r;
}

// ---------------------------------------------------------------------------
// Criteria

CriterionResult c1(const SuiteOptions&) {
  CriterionResult out;
  const auto det = ReproductionLaw::deterministic_binary();
  out.checks.push_back(exact_match("p0 deterministic binary", malthusian_exponent(det).p0, 1.0, 1e-12,
                                   {{"law", det.name()}}));
  const auto ext = laws::extinction();
  out.checks.push_back(exact_match("p0 extinction law", malthusian_exponent(ext).p0,
                                   std::log(2.0 / 3.0) / std::log(0.6), 1e-9, {{"law", ext.name()}}));
  // The oracle evaluates the moment directly, not through the law object.
  const auto kappa = [](double p) {
    return 1.0 - (0.2 * (std::pow(1.3, p) + std::pow(0.5, p)) + 0.8 * std::pow(0.4, p));
  };
  const double oracle = bisect(kappa, 1e-9, 1.0, 1e-10);
  const auto mixed = laws::mixed();
  out.checks.push_back(exact_match("p0 mixed law vs bisection", malthusian_exponent(mixed).p0, oracle, 1e-8,
                                   {{"law", mixed.name()}}));
  return out;
}

// Generation-n power sums of N trees, one row per tree.
std::vector<std::vector<double>> generation_sums(const ReproductionLaw& law, double p, std::size_t n_max,
                                                 std::size_t trees, std::uint64_t key, const SuiteOptions& o) {
  return collect<std::vector<double>>(trees, o.threads, [&](std::size_t i) {
    const auto tree = grow_to_generation(1.0, law, 1.0, n_max, derive_key(key, i), o.cap);
    std::vector<double> row(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) row[n] = tree.generation_power_sum(n, p);
    return row;
  });
}

CriterionResult c2(const SuiteOptions& o) {
  CriterionResult out;
  const std::size_t trees = scaled(10'000, o);
  const std::uint64_t key = derive_key(o.seed, 102);
  for (const auto& law : {ReproductionLaw::uniform_binary(), laws::mixed()}) {
    note(o, "M_8 over " + std::to_string(trees) + " trees, " + law.name());
    const double p0 = malthusian_exponent(law).p0;
    const auto rows = generation_sums(law, p0, 8, trees, derive_key(key, law.is_discrete()), o);
    std::vector<double> m8;
    for (const auto& r : rows) m8.push_back(r[8]);
    out.checks.push_back(within_sigma("mean M_8 = 1, " + law.name(), mean_of(m8), 1.0, 0.0, meta(law, o.seed)));
  }
  const auto det = ReproductionLaw::deterministic_binary();
  const auto rows = generation_sums(det, 1.0, 8, 100, derive_key(key, 7), o);
  double worst = 0.0;
  for (const auto& r : rows) {
    for (double m : r) worst = std::max(worst, std::abs(m - 1.0));
  }
  TestReport r;
  r.name = "M_n = 1 on every path, deterministic binary";
  r.statistic = worst;
  r.threshold = 0.0;
  r.n_samples = rows.size();
  r.metadata = meta(det, o.seed);
  r.detail = "max |M_n - 1| over n <= 8 and 100 trees: " + fmt(worst);
  out.checks.push_back(finish(std::move(r), worst == 0.0));
  return out;
}

CriterionResult c3(const SuiteOptions& o) {
  CriterionResult out;
  const std::size_t trees = scaled(10'000, o);
  const std::uint64_t key = derive_key(o.seed, 103);
  for (const auto& law : {ReproductionLaw::uniform_binary(), laws::mixed()}) {
    note(o, "martingale steps, " + law.name());
    const double p0 = malthusian_exponent(law).p0;
    const auto rows = generation_sums(law, p0, 9, trees, derive_key(key, law.is_discrete()), o);
    for (std::size_t n = 5; n <= 8; ++n) {
      std::vector<double> d;
      for (const auto& r : rows) d.push_back(r[n + 1] - r[n]);
      auto m = meta(law, o.seed);
      m["n"] = n;
      out.checks.push_back(
          within_sigma("mean M_" + std::to_string(n + 1) + " - M_" + std::to_string(n) + " = 0, " + law.name(),
                       mean_of(d), 0.0, 0.0, m));
    }
  }
  return out;
}

CriterionResult c4(const SuiteOptions& o) {
  CriterionResult out;
  const auto law = laws::mixed();
  const auto prof = malthusian_profile(law);
  const double p = 1.0;
  {
    TestReport r;
    r.name = "p = 1 lies in (p0, p_+)";
    r.statistic = p;
    r.metadata = meta(law, o.seed);
    r.detail = "p0 = " + fmt(prof.p0) + ", p_+ = " + (prof.p_plus ? fmt(*prof.p_plus) : std::string("none"));
    out.checks.push_back(finish(std::move(r), prof.p_plus && prof.p0 < p && p < *prof.p_plus));
  }
  note(o, "supermartingale steps, mixed law");
  const auto rows = generation_sums(law, p, 9, scaled(10'000, o), derive_key(o.seed, 104), o);
  for (std::size_t n = 5; n <= 8; ++n) {
    std::vector<double> d;
    for (const auto& r : rows) d.push_back(r[n + 1] - r[n]);
    const Estimate e = mean_of(d);
    TestReport r;
    r.name = "mean M^(1)_" + std::to_string(n + 1) + " - M^(1)_" + std::to_string(n) + " <= 4 sigma";
    r.statistic = e.value;
    r.threshold = 4.0 * std::max(e.std_error, kSigmaFloor);
    r.n_samples = e.n;
    r.metadata = meta(law, o.seed);
    r.detail = fmt(e.value) + " +- " + fmt(e.std_error);
    out.checks.push_back(finish(std::move(r), e.value <= r.threshold));
  }
  return out;
}

CriterionResult c5(const SuiteOptions& o) {
  CriterionResult out;
  const auto law = laws::extinction();
  const double q = 1.0 / 3.0;  // smallest root of 0.25 + 0.75 u^2 = u
  out.checks.push_back(exact_match("extinction probability", extinction_prob(law), q, 1e-12, meta(law, o.seed)));
  const std::size_t trees = scaled(10'000, o);
  note(o, "M_20 over " + std::to_string(trees) + " trees, extinction law");
  const double p0 = malthusian_exponent(law).p0;
  const std::uint64_t key = derive_key(o.seed, 105);
  const auto m20 = collect<double>(trees, o.threads, [&](std::size_t i) {
    const auto tree = grow_to_generation(1.0, law, 1.0, 20, derive_key(key, i), o.cap);
    return intrinsic_martingale_gen(tree, p0, 20);
  });
  std::vector<double> small;
  RunningStats survivors;
  for (double m : m20) {
    small.push_back(m < 1e-6 ? 1.0 : 0.0);
    if (m >= 1e-6) survivors.add(m);
  }
  Estimate frac = mean_of(small);
  frac.std_error = std::sqrt(q * (1.0 - q) / static_cast<double>(trees));
  auto m = meta(law, o.seed);
  m["surviving_mean_M20"] = survivors.mean();
  out.checks.push_back(within_sigma("fraction with M_20 < 1e-6 = q", frac, q, 0.0, m));
  return out;
}

// Snapshot summaries used by the Markov and scaling checks.
struct Summary {
  double mass = 0.0;
  double count = 0.0;
  double largest = 0.0;
};

Summary summarize(const FinitePointMeasure& x, double p0, double scale = 1.0) {
  const FinitePointMeasure s = scale == 1.0 ? x : x.scaled(scale);
  return {quantize(power_mass(s, p0)), static_cast<double>(s.count()), s.largest()};
}

std::vector<double> column(const std::vector<Summary>& rows, double Summary::*field) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.*field);
  return out;
}

CriterionResult c6(const SuiteOptions& o) {
  CriterionResult out;
  const double alpha = 1.0;
  const double t = 1.0;
  const double r = 1.0;
  const std::size_t n = scaled(10'000, o);
  for (const auto& law : {ReproductionLaw::uniform_binary(), laws::mixed()}) {
    note(o, "regrow from snapshot vs direct, " + law.name());
    const double p0 = malthusian_exponent(law).p0;
    const std::uint64_t key = derive_key(derive_key(o.seed, 106), law.is_discrete());
    const auto direct = collect<Summary>(n, o.threads, [&](std::size_t i) {
      const auto tree = grow_to_time(1.0, law, alpha, t + r, derive_key(derive_key(key, 1), i), o.cap);
      return summarize(snapshot(tree, t + r), p0);
    });
    const auto regrown = collect<Summary>(n, o.threads, [&](std::size_t i) {
      const std::uint64_t k = derive_key(derive_key(key, 2), i);
      const auto first = grow_to_time(1.0, law, alpha, t, derive_key(k, 0), o.cap);
      const auto atoms = snapshot(first, t);
      FinitePointMeasure total;
      for (std::size_t j = 0; j < atoms.count(); ++j) {
        const auto sub = grow_to_time(atoms.atoms()[j], law, alpha, r, derive_key(k, j + 1), o.cap);
        total = total.merged(snapshot(sub, r));
      }
      return summarize(total, p0);
    });
    auto m = meta(law, o.seed);
    m["t"] = t;
    m["r"] = r;
    out.checks.push_back(ks_check("M(t+r), " + law.name(), column(direct, &Summary::mass),
                                  column(regrown, &Summary::mass), m));
    out.checks.push_back(ks_check("#X(t+r), " + law.name(), column(direct, &Summary::count),
                                  column(regrown, &Summary::count), m));
    out.checks.push_back(ks_check("largest atom of X(t+r), " + law.name(), column(direct, &Summary::largest),
                                  column(regrown, &Summary::largest), m));
  }
  return out;
}

CriterionResult c7(const SuiteOptions& o) {
  CriterionResult out;
  const double alpha = 1.0;
  const double c = 2.0;
  const double t = 1.0;
  const std::size_t n = scaled(10'000, o);
  for (const auto& law : {laws::mixed(), ReproductionLaw::uniform_binary()}) {
    note(o, "scaling property, " + law.name());
    const double p0 = malthusian_exponent(law).p0;
    const std::uint64_t key = derive_key(derive_key(o.seed, 107), law.is_discrete());
    const auto from_one = collect<Summary>(n, o.threads, [&](std::size_t i) {
      const double tc = std::pow(c, alpha) * t;
      const auto tree = grow_to_time(1.0, law, alpha, tc, derive_key(derive_key(key, 1), i), o.cap);
      return summarize(snapshot(tree, tc), p0, c);
    });
    const auto from_c = collect<Summary>(n, o.threads, [&](std::size_t i) {
      const auto tree = grow_to_time(c, law, alpha, t, derive_key(derive_key(key, 2), i), o.cap);
      return summarize(snapshot(tree, t), p0);
    });
    auto m = meta(law, o.seed);
    m["c"] = c;
    m["t"] = t;
    if (law.is_discrete()) {
      out.checks.push_back(ks_check("<x^p0, c X(c^alpha t)> vs root c, " + law.name(),
                                    column(from_one, &Summary::mass), column(from_c, &Summary::mass), m));
    }
    out.checks.push_back(ks_check("atom count, " + law.name(), column(from_one, &Summary::count),
                                  column(from_c, &Summary::count), m));
  }
  return out;
}

CriterionResult c8(const SuiteOptions& o) {
  CriterionResult out;
  const double alpha = 1.0;
  const std::size_t n = scaled(10'000, o);
  const auto k = [](double x) { return std::exp(-x); };
  for (const auto& law : {ReproductionLaw::deterministic_binary(), laws::mixed()}) {
    const double p0 = malthusian_exponent(law).p0;
    const StepSampler steps(law, p0, o.seed);
    for (double t : {1.0, 3.0}) {
      note(o, "spine identity, " + law.name() + ", t = " + fmt(t));
      const std::uint64_t key = derive_key(derive_key(derive_key(o.seed, 108), law.is_lattice()), t == 1.0);
      const auto tree_side = collect<double>(n, o.threads, [&](std::size_t i) {
        const auto tree = grow_to_time(1.0, law, alpha, t, derive_key(derive_key(key, 1), i), o.cap);
        return pair([&](double x) { return std::pow(x, p0) * k(x); }, snapshot(tree, t));
      });
      const auto spine_side = collect<double>(n, o.threads, [&](std::size_t i) {
        Stream rng(derive_key(derive_key(key, 2), i));
        return k(walk_chi(steps, alpha, 1.0, t, rng));
      });
      const Estimate spine = mean_of(spine_side);
      auto m = meta(law, o.seed);
      m["t"] = t;
      out.checks.push_back(within_sigma("E<x^p0 e^-x, X(t)> = E* e^-chi(t), " + law.name() + ", t = " + fmt(t),
                                        mean_of(tree_side), spine.value, spine.std_error, m));
    }
  }
  return out;
}

std::vector<double> draw_steps(const StepSampler& steps, std::size_t n, std::uint64_t key) {
  Stream rng(key);
  std::vector<double> out(n);
  for (auto& s : out) s = steps(rng);
  return out;
}

CriterionResult c9(const SuiteOptions& o) {
  CriterionResult out;
  const std::size_t n = scaled(100'000, o);
  const std::uint64_t key = derive_key(o.seed, 109);
  const auto uni = ReproductionLaw::uniform_binary();
  {
    note(o, "step law of the uniform split");
    const StepSampler steps(uni, 1.0, derive_key(key, 1));
    const auto s = draw_steps(steps, n, derive_key(key, 2));
    const double d = ks_distance_to_cdf(s, [](double y) { return y < 0.0 ? std::exp(2.0 * y) : 1.0; });
    out.checks.push_back(below("KS distance of S_1 to e^{2y}, " + uni.name(), d, 0.02, n, meta(uni, o.seed)));
  }
  for (const auto& law : {uni, laws::mixed()}) {
    const double p0 = malthusian_exponent(law).p0;
    const StepSampler steps(law, p0, derive_key(key, 3));
    const auto s = draw_steps(steps, n, derive_key(key, 4 + law.is_discrete()));
    for (double p : {0.1, 0.5}) {
      std::vector<double> e;
      e.reserve(n);
      for (double v : s) e.push_back(std::exp(p * v));
      auto m = meta(law, o.seed);
      m["p"] = p;
      out.checks.push_back(within_sigma("E* e^{p S_1} = 1 - kappa(p + p0), p = " + fmt(p) + ", " + law.name(),
                                        mean_of(e), 1.0 - law.kappa(p + p0), 0.0, m));
    }
    const double rho = lag1_autocorrelation(s);
    out.checks.push_back(below("|lag-1 autocorrelation| of steps, " + law.name(), std::abs(rho),
                               4.0 / std::sqrt(static_cast<double>(n)), n, meta(law, o.seed)));
  }
  return out;
}

CriterionResult c10(const SuiteOptions& o) {
  CriterionResult out;
  const double alpha = 1.0;
  const std::size_t walks = scaled(10'000, o);
  const std::size_t steps_per_walk = 10;
  for (const auto& law : {laws::mixed(), ReproductionLaw::uniform_binary()}) {
    note(o, "spine lifetimes, " + law.name());
    const double p0 = malthusian_exponent(law).p0;
    const StepSampler steps(law, p0, o.seed);
    const std::uint64_t key = derive_key(derive_key(o.seed, 110), law.is_discrete());
    const auto paths = collect<TaggedPath>(walks, o.threads, [&](std::size_t i) {
      Stream rng(derive_key(key, i));
      return simulate_tagged_walk(steps, alpha, 1.0, steps_per_walk, rng);
    });
    std::vector<double> normalized;
    normalized.reserve(walks * steps_per_walk);
    for (const auto& p : paths) {
      for (std::size_t k = 0; k < steps_per_walk; ++k) {
        normalized.push_back(std::exp(alpha * p.log_sizes[k]) * p.lifetimes[k]);
      }
    }
    const double d = ks_distance_to_cdf(normalized, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); });
    out.checks.push_back(below("KS distance of chi^alpha zeta to Exp(1), " + law.name(), d, 0.02,
                               normalized.size(), meta(law, o.seed)));
  }
  return out;
}

CriterionResult c11(const SuiteOptions& o) {
  CriterionResult out;
  const double alpha = 1.0;
  const double t = 5.0;
  const std::size_t n = scaled(10'000, o);
  for (const auto& law : {laws::mixed(), ReproductionLaw::deterministic_binary()}) {
    note(o, "Lamperti routes, " + law.name());
    const double p0 = malthusian_exponent(law).p0;
    const StepSampler steps(law, p0, o.seed);
    const std::uint64_t key = derive_key(derive_key(o.seed, 111), law.is_lattice());
    const auto walk = collect<double>(n, o.threads, [&](std::size_t i) {
      Stream rng(derive_key(derive_key(key, 1), i));
      return walk_chi(steps, alpha, 1.0, t, rng);
    });
    const auto lamperti = collect<double>(n, o.threads, [&](std::size_t i) {
      Stream rng(derive_key(derive_key(key, 2), i));
      return lamperti_chi(steps, alpha, 1.0, t, rng);
    });
    auto m = meta(law, o.seed);
    m["t"] = t;
    out.checks.push_back(ks_check("chi(t): walk clock vs Lamperti, " + law.name(), walk, lamperti, m));
  }
  return out;
}

struct FunctionalDraws {
  std::vector<double> values;
  double max_bound = 0.0;
};

FunctionalDraws draw_functional(const ExponentialFunctional& f, std::size_t n, std::uint64_t key, unsigned threads) {
  const auto s = collect<FunctionalSample>(n, threads, [&](std::size_t i) {
    Stream rng(derive_key(key, i));
    return f(rng);
  });
  FunctionalDraws out;
  for (const auto& x : s) {
    out.values.push_back(x.value);
    out.max_bound = std::max(out.max_bound, x.truncation_bound);
  }
  return out;
}

CriterionResult c12(const SuiteOptions& o) {
  CriterionResult out;
  const double alpha = 1.0;
  const std::size_t n = scaled(100'000, o);
  const std::uint64_t key = derive_key(o.seed, 112);
  const auto det = ReproductionLaw::deterministic_binary();
  const auto uni = ReproductionLaw::uniform_binary();
  for (const auto& law : {det, uni}) {
    note(o, "exponential functional, " + law.name());
    const bool is_det = law.is_lattice();
    const StepSampler steps(law, 1.0, derive_key(key, 1));
    const ExponentialFunctional f(law, steps, alpha, o.tail_tol);
    const auto draws = draw_functional(f, n, derive_key(key, 2 + is_det), o.threads);
    std::vector<double> inv;
    for (double v : draws.values) inv.push_back(1.0 / v);
    auto m = meta(law, o.seed);
    m["alpha"] = alpha;
    if (is_det) {
      // E exp(eta_s) = exp(-s/2), so E I = 2; E 1/I = alpha m1 = ln 2.
      out.checks.push_back(within_sigma("mean I = 2, " + law.name(), mean_of(draws.values), 2.0, 0.0, m));
      out.checks.push_back(
          within_sigma("mean 1/I = ln 2, " + law.name(), mean_of(inv), std::numbers::ln2, 0.0, m));
    } else {
      out.checks.push_back(within_sigma("mean 1/I = 0.5, " + law.name(), mean_of(inv), 0.5, 0.0, m));
    }
    TestReport r;
    r.name = "certified truncation error <= tail_tol, " + law.name();
    r.statistic = draws.max_bound;
    r.threshold = o.tail_tol;
    r.n_samples = n;
    r.metadata = m;
    r.detail = "largest bound " + fmt(draws.max_bound);
    out.checks.push_back(finish(std::move(r), draws.max_bound <= o.tail_tol));
  }
  return out;
}

LimitOptions limit_options(const SuiteOptions& o, std::size_t replicas) {
  LimitOptions lo;
  lo.seed = o.seed;
  lo.replicas = scaled(replicas, o);
  lo.y_pool = std::max<std::size_t>(1000, scaled(100'000, o));
  lo.tail_tol = o.tail_tol;
  lo.bias_fraction = o.bias_fraction;
  lo.threads = o.threads;
  lo.cap = o.cap;
  return lo;
}

TestReport prop2_end_to_end(const LimitModel& model, double t, std::size_t n, const SuiteOptions& o) {
  const double alpha = model.alpha();
  const std::uint64_t key = derive_key(derive_key(o.seed, 113), model.law().is_discrete());
  const auto scaled_chi = collect<double>(n, o.threads, [&](std::size_t i) {
    Stream rng(derive_key(key, i));
    return std::pow(t, 1.0 / alpha) * walk_chi(model.steps(), alpha, 1.0, t, rng);
  });
  Stream rng(derive_key(key, n + 1));
  const auto y = model.y_pool().resample(n, rng);
  const KsResult ks = ks_two_sample_statistic(scaled_chi, y);
  auto m = model.metadata();
  m["t"] = t;
  m["p_value"] = ks.p_value;
  return lattice_routed(below("KS distance t^{1/alpha} chi(t) vs Y, " + model.law().name(), ks.statistic, 0.05, n,
                              m, "D = " + fmt(ks.statistic) + " (p = " + fmt(ks.p_value) + ")"),
                        model.law());
}

CriterionResult c13(const SuiteOptions& o) {
  CriterionResult out;
  for (const auto& law : {ReproductionLaw::uniform_binary(), laws::mixed()}) {
    note(o, "t chi(t) vs Y, " + law.name());
    const LimitModel model(law, 1.0, limit_options(o, 10'000));
    out.checks.push_back(prop2_end_to_end(model, 50.0, scaled(10'000, o), o));
  }
  return out;
}

CriterionResult c14(const SuiteOptions& o) {
  CriterionResult out;
  note(o, "moment scaling, mixed law");
  const LimitModel model(laws::mixed(), 1.0, limit_options(o, 10'000));
  out.checks.push_back(moment_scaling_test(model, 1.0, {10.0, 30.0, 50.0}));
  return out;
}

CriterionResult c15(const SuiteOptions& o) {
  CriterionResult out;
  note(o, "L^p convergence, uniform split");
  const LimitModel model(ReproductionLaw::uniform_binary(), 1.0, limit_options(o, 4000));
  out.checks.push_back(lp_convergence_test(model, [](double y) { return std::exp(-y); }, {10.0, 30.0, 50.0},
                                           "exp(-y)"));
  return out;
}

CriterionResult c16(const SuiteOptions& o) {
  CriterionResult out;
  const auto law = laws::mixed();
  const double alpha = 1.0;
  const FinitePointMeasure y({1.0});
  const auto g = [](double x) { return x; };
  const Estimate exact = generator_apply(law, alpha, g, y);
  // Hand evaluation of the generator at delta_1 with g(x) = x.
  const double oracle =
      0.2 * (std::exp(-1.8) - std::exp(-1.0)) + 0.8 * (std::exp(-0.4) - std::exp(-1.0));
  out.checks.push_back(exact_match("generator_apply vs hand formula", exact.value, oracle, 1e-14, meta(law, o.seed)));
  const std::size_t n = scaled(10'000'000, o);
  const double h = 1e-3;
  note(o, "finite-difference generator over " + std::to_string(n) + " replicas");
  const Estimate fd = generator_finite_difference(law, alpha, g, y, h, n, derive_key(o.seed, 116), o.threads);
  auto m = meta(law, o.seed);
  m["h"] = h;
  m["finite_difference"] = fd.value;
  m["finite_difference_std_error"] = fd.std_error;
  const double rel = std::abs(fd.value - exact.value) / std::abs(exact.value);
  out.checks.push_back(below("finite difference within 5% of G phi_g", rel, 0.05, n, m,
                             "FD " + fmt(fd.value) + " +- " + fmt(fd.std_error) + " vs " + fmt(exact.value) +
                                 " (relative " + fmt(rel) + ")"));
  return out;
}

CriterionResult c17(const SuiteOptions& o) {
  CriterionResult out;
  const std::size_t n = scaled(10'000, o);
  const std::uint64_t key = derive_key(o.seed, 117);
  // Children of individual (1) together with the other generation-1 labels.
  const auto mixed_line = [](std::uint32_t width) {
    std::vector<NodeLabel> labels;
    for (std::uint32_t j = 1; j <= width; ++j) labels.push_back(NodeLabel({1, j}));
    for (std::uint32_t j = 2; j <= width; ++j) labels.push_back(NodeLabel({j}));
    return Line(labels);
  };
  struct Row {
    double mass = 0.0;
    bool covering = false;
  };
  const auto run = [&](const ReproductionLaw& law, const Line& q, std::uint64_t k) {
    const double p0 = malthusian_exponent(law).p0;
    return collect<Row>(n, o.threads, [&](std::size_t i) {
      const auto tree = grow_to_generation(1.0, law, 1.0, q.max_generation(), derive_key(k, i), o.cap);
      return Row{line_mass(tree, q, p0), is_covering(tree, q)};
    });
  };
  const auto report = [&](const std::string& name, const ReproductionLaw& law, const std::vector<Row>& rows,
                          bool expect_covering) {
    std::vector<double> masses;
    std::size_t covering = 0;
    for (const auto& r : rows) {
      masses.push_back(r.mass);
      covering += r.covering;
    }
    auto m = meta(law, o.seed);
    m["covering_trees"] = covering;
    const Estimate e = mean_of(masses);
    if (expect_covering) {
      TestReport c;
      c.name = "line covers every tree, " + law.name();
      c.statistic = static_cast<double>(covering);
      c.threshold = static_cast<double>(rows.size());
      c.n_samples = rows.size();
      c.metadata = m;
      c.detail = std::to_string(covering) + " of " + std::to_string(rows.size());
      out.checks.push_back(finish(std::move(c), covering == rows.size()));
      out.checks.push_back(within_sigma(name, e, 1.0, 0.0, m));
    } else {
      TestReport r;
      r.name = name;
      r.statistic = e.value;
      r.threshold = 1.0 - 4.0 * std::max(e.std_error, kSigmaFloor);
      r.n_samples = e.n;
      r.metadata = m;
      r.detail = fmt(e.value) + " +- " + fmt(e.std_error) + "; covering in " + std::to_string(covering) + " trees";
      out.checks.push_back(finish(std::move(r), e.value < r.threshold));
    }
  };
  note(o, "covering-line masses");
  for (const auto& law : {laws::mixed(), ReproductionLaw::uniform_binary(), laws::extinction()}) {
    const Line q = mixed_line(2);
    report("mean M_Q = 1 on a mixed-generation covering line, " + law.name(), law,
           run(law, q, derive_key(key, law.name().size())), true);
  }
  const auto ext = laws::extinction();
  const Line partial({NodeLabel({1})});
  report("mean M_Q < 1 on the non-covering line {(1)}, " + ext.name(), ext, run(ext, partial, derive_key(key, 99)),
         false);
  return out;
}

CriterionResult c18(const SuiteOptions&) {
  CriterionResult out;
  const auto law = ReproductionLaw::dirichlet({1.0, 1.0});
  // E<x^p, s> = 2 a^p / (p + 1) with a = 1.5, minimal at p = 1/ln a - 1.
  const double a = 1.5;
  const double p_star = 1.0 / std::log(a) - 1.0;
  const double min_moment = 2.0 * std::pow(a, p_star) / (p_star + 1.0);
  TestReport r;
  r.name = "Dirichlet(1,1) with the default scale has no Malthusian exponent";
  r.metadata = {{"law", law.name()}, {"oracle_min_moment", min_moment}};
  try {
    const auto root = malthusian_exponent(law);
    r.detail = "solver returned p0 = " + fmt(root.p0);
    out.checks.push_back(finish(std::move(r), false));
  } catch (const NoMalthusianExponent& e) {
    r.statistic = std::abs(e.min_moment() - min_moment);
    r.threshold = 1e-6;
    r.metadata["reported_min_moment"] = e.min_moment();
    r.metadata["reported_argmin"] = e.argmin();
    r.detail = "min moment " + fmt(e.min_moment()) + " at p = " + fmt(e.argmin()) + " (oracle " + fmt(min_moment) +
               " at " + fmt(p_star) + ")";
    out.checks.push_back(finish(std::move(r), r.statistic <= r.threshold));
  }
  return out;
}

}  // namespace

std::string criterion_title(int id) {
  static const char* titles[] = {
      "Malthusian solver exactness",
      "Martingale normalization",
      "Martingale step",
      "Supermartingale above p0",
      "Extinction dichotomy",
      "Branching Markov property",
      "Scaling property",
      "Spine identity",
      "Random-walk law of the spine",
      "Spine lifetimes",
      "Lamperti equivalence",
      "Exponential functional",
      "Convergence of t^{1/alpha} chi(t) to Y",
      "Moment scaling",
      "L^p convergence of sigma_t",
      "Generator",
      "Covering-line martingale",
      "Dirichlet example without Malthusian exponent",
  };
  if (id < 1 || id > kCriterionCount) throw DomainError("no criterion " + std::to_string(id));
  return titles[id - 1];
}

CriterionResult run_criterion(int id, const SuiteOptions& opts) {
  using Fn = CriterionResult (*)(const SuiteOptions&);
  static const Fn table[] = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13, c14, c15, c16, c17, c18};
  const std::string title = criterion_title(id);
  const auto start = std::chrono::steady_clock::now();
  CriterionResult out = table[id - 1](opts);
  out.id = id;
  out.title = title;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<TestReport> law_battery(const ReproductionLaw& law, double alpha, const SuiteOptions& o) {
  std::vector<TestReport> out;
  const auto prof = malthusian_profile(law);
  const double p0 = prof.p0;
  const std::size_t n = scaled(10'000, o);
  const std::uint64_t key = derive_key(o.seed, 200);

  note(o, "martingale normalization");
  const auto rows = generation_sums(law, p0, 6, n, derive_key(key, 1), o);
  std::vector<double> m6;
  std::vector<double> step;
  for (const auto& r : rows) {
    m6.push_back(r[6]);
    step.push_back(r[6] - r[5]);
  }
  out.push_back(within_sigma("mean M_6 = 1", mean_of(m6), 1.0, 0.0, meta(law, o.seed)));
  out.push_back(within_sigma("mean M_6 - M_5 = 0", mean_of(step), 0.0, 0.0, meta(law, o.seed)));

  if (prof.extinction_prob > 0.0 && prof.extinction_prob < 1.0) {
    note(o, "extinction frequency");
    const auto rows12 = generation_sums(law, p0, 12, n, derive_key(key, 2), o);
    std::vector<double> dead;
    for (const auto& r : rows12) dead.push_back(r[12] == 0.0 ? 1.0 : 0.0);
    // Extinction by generation 12 slightly undercounts eventual extinction.
    const Estimate e = mean_of(dead);
    auto m = meta(law, o.seed);
    out.push_back(below("extinct by generation 12 <= q + 4 sigma", e.value,
                        prof.extinction_prob + 4.0 * std::max(e.std_error, kSigmaFloor), n, m));
  }

  const StepSampler steps(law, p0, derive_key(key, 3));
  {
    note(o, "step law");
    const auto s = draw_steps(steps, scaled(100'000, o), derive_key(key, 4));
    std::vector<double> e;
    for (double v : s) e.push_back(std::exp(0.5 * v));
    if (0.5 + p0 < prof.p_upper) {
      out.push_back(within_sigma("E* e^{S_1/2} = 1 - kappa(1/2 + p0)", mean_of(e), 1.0 - law.kappa(0.5 + p0), 0.0,
                                 meta(law, o.seed)));
    }
    out.push_back(within_sigma("E* S_1 = -kappa'(p0)", mean_of(s), -prof.kappa_prime_at_p0, 0.0,
                               meta(law, o.seed)));
  }

  if (alpha > 0.0) {
    note(o, "spine identity and Lamperti routes");
    const double t = 1.0;
    const auto tree_side = collect<double>(n, o.threads, [&](std::size_t i) {
      const auto tree = grow_to_time(1.0, law, alpha, t, derive_key(derive_key(key, 5), i), o.cap);
      return pair([&](double x) { return std::pow(x, p0) * std::exp(-x); }, snapshot(tree, t));
    });
    const auto walk = collect<double>(n, o.threads, [&](std::size_t i) {
      Stream rng(derive_key(derive_key(key, 6), i));
      return walk_chi(steps, alpha, 1.0, t, rng);
    });
    const auto lamperti = collect<double>(n, o.threads, [&](std::size_t i) {
      Stream rng(derive_key(derive_key(key, 7), i));
      return lamperti_chi(steps, alpha, 1.0, t, rng);
    });
    std::vector<double> kw;
    for (double c : walk) kw.push_back(std::exp(-c));
    const Estimate spine = mean_of(kw);
    out.push_back(within_sigma("spine identity, k = e^-x, t = 1", mean_of(tree_side), spine.value,
                               spine.std_error, meta(law, o.seed)));
    out.push_back(ks_check("chi(t): walk clock vs Lamperti, t = 1", walk, lamperti, meta(law, o.seed)));
  }

  if (alpha > 0.0 && prof.kappa_prime_at_p0 > 0.0) {
    note(o, "exponential functional and limit theorems");
    const LimitModel model(law, alpha, limit_options(o, 10'000));
    const Estimate norm = model.y_pool().normalization();
    out.push_back(within_sigma("mean 1/I = alpha m1", norm, alpha * prof.m1, 0.0, model.metadata()));
    TestReport trunc;
    trunc.name = "certified truncation error <= tail_tol";
    trunc.statistic = model.y_pool().max_truncation;
    trunc.threshold = o.tail_tol;
    trunc.n_samples = model.y_pool().functional.size();
    trunc.metadata = model.metadata();
    out.push_back(finish(std::move(trunc), model.y_pool().max_truncation <= o.tail_tol));
    out.push_back(prop2_end_to_end(model, 50.0, n, o));
    out.push_back(mean_measure_test(model, 50.0, [](double y) { return std::exp(-y); }, "exp(-y)"));
  } else {
    TestReport skipped;
    skipped.name = "limit theorems";
    skipped.detail = "need alpha > 0 and kappa'(p0) > 0";
    skipped.metadata = meta(law, o.seed);
    out.push_back(skipped);
  }
  return out;
}

}  // namespace sbmc
