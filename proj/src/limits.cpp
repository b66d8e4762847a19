#include "sbmc/limits.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "sbmc/errors.hpp"
#include "sbmc/parallel.hpp"

namespace sbmc {

namespace {

// Seed namespaces for the tree replicas of each test.
constexpr std::uint64_t kMeanMeasure = 11;
constexpr std::uint64_t kMomentScaling = 12;
constexpr std::uint64_t kLp = 13;
constexpr std::uint64_t kYPool = 14;

template <class F>
std::vector<double> replicate(std::size_t n, unsigned threads, F&& f) {
  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

RunningStats summarize(const std::vector<double>& xs) {
  RunningStats st;
  for (double x : xs) st.add(x);
  return st;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::optional<std::vector<MixtureComponent>> discrete_components(const ReproductionLaw& law) {
  if (std::holds_alternative<DeterministicBinary>(law.variant())) {
    return std::vector<MixtureComponent>{{1.0, {0.5, 0.5}}};
  }
  if (const auto* m = std::get_if<DiscreteMixture>(&law.variant())) return m->components;
  return std::nullopt;
}

}  // namespace

double WeightedEmpiricalMeasure::integrate(const std::function<double(double)>& k) const {
  double total = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double v = k(items[i].location);
    if (!std::isfinite(v)) throw EvaluationError("test function is not finite", i, items[i].location);
    total += items[i].weight * v;
  }
  return total;
}

WeightedEmpiricalMeasure sigma_t(const FinitePointMeasure& snapshot, double t, double alpha, double p0) {
  if (alpha == 0.0) throw UnsupportedRegime("sigma_t needs alpha > 0");
  if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
  if (!(t > 0.0)) throw DomainError("sigma_t needs t > 0");
  WeightedEmpiricalMeasure out;
  const double scale = std::pow(t, 1.0 / alpha);
  for (double x : snapshot.atoms()) {
    const double w = std::pow(x, p0);
    out.items.push_back({scale * x, w});
    out.total_weight += w;
  }
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::lattice_caveat:
      return "lattice_caveat";
    case Verdict::skipped:
      return "skipped";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const TestReport& r) {
  j = {{"name", r.name},
       {"statistic", r.statistic},
       {"threshold", r.threshold},
       {"p_value", r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json(nullptr)},
       {"n_samples", r.n_samples},
       {"verdict", to_string(r.verdict)},
       {"metadata", r.metadata},
       {"detail", r.detail}};
}

// RFC 4180 quoting for fields that need it.
static std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_reports_csv(std::ostream& os, const std::vector<TestReport>& reports) {
  os << "name,law,alpha,t,statistic,threshold,verdict,seed\n";
  for (const auto& r : reports) {
    const auto field = [&](const char* key) -> std::string {
      if (!r.metadata.contains(key)) return "";
      const auto& v = r.metadata.at(key);
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    os << csv_field(r.name) << ',' << csv_field(field("law")) << ',' << field("alpha") << ',' << field("t") << ',' << r.statistic << ','
       << r.threshold << ',' << to_string(r.verdict) << ',' << field("seed") << '\n';
  }
}

// ---------------------------------------------------------------------------

LimitModel::LimitModel(ReproductionLaw law, double alpha, const LimitOptions& opts)
    : law_(std::move(law)), alpha_(alpha), opts_(opts) {
  if (alpha == 0.0) throw UnsupportedRegime("limit theorems need alpha > 0");
  if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
  profile_ = malthusian_profile(law_);
  steps_ = std::make_unique<StepSampler>(law_, profile_.p0, derive_key(opts.seed, substream::kPool));
  functional_ = std::make_unique<ExponentialFunctional>(law_, *steps_, alpha, opts.tail_tol);
  pool_ = sample_Y(*functional_, opts.y_pool, derive_key(opts.seed, kYPool), opts.threads);
}

nlohmann::json LimitModel::metadata() const {
  return {{"law", law_.name()}, {"law_spec", law_}, {"alpha", alpha_}, {"p0", profile_.p0},
          {"seed", opts_.seed}, {"replicas", opts_.replicas}, {"y_pool", opts_.y_pool}};
}

TestReport mean_measure_test(const LimitModel& model, double t, const std::function<double(double)>& k,
                             const std::string& k_name) {
  const auto& opts = model.options();
  const std::uint64_t base = derive_key(opts.seed, kMeanMeasure);
  const auto tree_side = replicate(opts.replicas, opts.threads, [&](std::size_t i) {
    const auto tree = grow_to_time(1.0, model.law(), model.alpha(), t, derive_key(base, i), opts.cap);
    return sigma_t(snapshot(tree, t), t, model.alpha(), model.p0()).integrate(k);
  });
  const RunningStats tree_stats = summarize(tree_side);
  const Estimate y_side = model.y_pool().expectation(k);

  TestReport r;
  r.name = "mean_measure";
  r.statistic = std::abs(tree_stats.mean() - y_side.value);
  r.threshold = 4.0 * combined_error(tree_stats.std_error(), y_side.std_error) +
                opts.bias_fraction * std::abs(y_side.value);
  r.n_samples = opts.replicas;
  r.metadata = model.metadata();
  r.metadata["t"] = t;
  r.metadata["k"] = k_name;
  r.metadata["tree_estimate"] = tree_stats.mean();
  r.metadata["tree_std_error"] = tree_stats.std_error();
  r.metadata["y_estimate"] = y_side.value;
  r.metadata["y_std_error"] = y_side.std_error;
  r.detail = "tree " + fmt(tree_stats.mean()) + " +- " + fmt(tree_stats.std_error()) + ", Y " + fmt(y_side.value) +
             " +- " + fmt(y_side.std_error);
  if (model.law().is_lattice()) {
    r.verdict = Verdict::lattice_caveat;
  } else {
    r.verdict = r.statistic < r.threshold ? Verdict::pass : Verdict::fail;
  }
  return r;
}

TestReport moment_scaling_test(const LimitModel& model, double p, const std::vector<double>& t_grid) {
  const auto& prof = model.profile();
  if (!prof.p_plus) throw DomainError("moment scaling needs a second root p_+ of kappa");
  if (!(p >= prof.p0 && p < *prof.p_plus)) {
    throw DomainError("moment scaling needs p in [p0, p_+) = [" + fmt(prof.p0) + ", " + fmt(*prof.p_plus) + ")");
  }
  if (t_grid.empty()) throw DomainError("empty time grid");
  const auto& opts = model.options();
  const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
  const double exponent = (p - prof.p0) / model.alpha();
  const std::size_t nt = t_grid.size();
  const std::uint64_t base = derive_key(opts.seed, kMomentScaling);

  std::vector<double> values(opts.replicas * nt);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t i) {
    const auto tree = grow_to_time(1.0, model.law(), model.alpha(), horizon, derive_key(base, i), opts.cap);
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = t_grid[j];
      values[i * nt + j] = std::pow(t, exponent) * power_mass(snapshot(tree, t), p);
    }
  });

  const Estimate target = model.y_pool().expectation([&](double y) { return std::pow(y, p - prof.p0); });
  std::vector<double> deviations(nt);
  std::vector<double> errors(nt);
  std::vector<double> means(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    RunningStats st;
    for (std::size_t i = 0; i < opts.replicas; ++i) st.add(values[i * nt + j]);
    means[j] = st.mean();
    errors[j] = st.std_error();
    deviations[j] = std::abs(st.mean() - target.value);
  }
  bool monotone = true;
  for (std::size_t j = 1; j < nt; ++j) monotone = monotone && deviations[j] <= deviations[j - 1];

  TestReport r;
  r.name = "moment_scaling";
  r.statistic = deviations.back();
  r.threshold = 4.0 * combined_error(errors.back(), target.std_error) + opts.bias_fraction * std::abs(target.value);
  r.n_samples = opts.replicas;
  r.metadata = model.metadata();
  r.metadata["t"] = t_grid.back();
  r.metadata["t_grid"] = t_grid;
  r.metadata["p"] = p;
  r.metadata["scaled_moments"] = means;
  r.metadata["std_errors"] = errors;
  r.metadata["deviations"] = deviations;
  r.metadata["target"] = target.value;
  r.metadata["target_std_error"] = target.std_error;
  r.metadata["non_increasing"] = monotone;
  std::string series;
  for (std::size_t j = 0; j < nt; ++j) series += (j ? ", " : "") + fmt(deviations[j]);
  r.detail = "target " + fmt(target.value) + " +- " + fmt(target.std_error) + "; deviations [" + series + "]";
  r.verdict = (monotone && r.statistic < r.threshold) ? Verdict::pass : Verdict::fail;
  return r;
}

TestReport lp_convergence_test(const LimitModel& model, const std::function<double(double)>& k,
                               const std::vector<double>& t_grid, const std::string& k_name) {
  if (t_grid.empty()) throw DomainError("empty time grid");
  const auto& opts = model.options();
  const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
  const std::size_t nt = t_grid.size();
  const std::uint64_t base = derive_key(opts.seed, kLp);
  const Estimate ek = model.y_pool().expectation(k);

  std::vector<double> values(opts.replicas * nt);
  std::vector<double> minf(opts.replicas);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t i) {
    MarkedTree tree(model.law(), model.alpha(), 1.0, derive_key(base, i), opts.cap);
    tree.grow_to_time(horizon);
    std::vector<double> integrals(nt);
    for (std::size_t j = 0; j < nt; ++j) {
      integrals[j] = sigma_t(snapshot(tree, t_grid[j]), t_grid[j], model.alpha(), model.p0()).integrate(k);
    }
    const Line q = stopping_line(tree, model.p0(), opts.minf_generation, opts.minf_floor);
    minf[i] = line_mass(tree, q, model.p0());
    for (std::size_t j = 0; j < nt; ++j) {
      values[i * nt + j] = std::pow(std::abs(integrals[j] - minf[i] * ek.value), opts.lp_exponent);
    }
  });

  std::vector<double> means(nt);
  std::vector<double> errors(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    RunningStats st;
    for (std::size_t i = 0; i < opts.replicas; ++i) st.add(values[i * nt + j]);
    means[j] = st.mean();
    errors[j] = st.std_error();
  }
  bool monotone = true;
  for (std::size_t j = 1; j < nt; ++j) monotone = monotone && means[j] <= means[j - 1];

  TestReport r;
  r.name = "lp_convergence";
  r.statistic = means.back();
  r.threshold = opts.lp_threshold;
  r.n_samples = opts.replicas;
  r.metadata = model.metadata();
  r.metadata["t"] = t_grid.back();
  r.metadata["t_grid"] = t_grid;
  r.metadata["k"] = k_name;
  r.metadata["exponent"] = opts.lp_exponent;
  r.metadata["mean_distance"] = means;
  r.metadata["std_errors"] = errors;
  r.metadata["ek_y"] = ek.value;
  r.metadata["minf_mean"] = summarize(minf).mean();
  r.metadata["non_increasing"] = monotone;
  std::string series;
  for (std::size_t j = 0; j < nt; ++j) series += (j ? ", " : "") + fmt(means[j]);
  r.detail = "mean |D|^" + fmt(opts.lp_exponent) + " along t: [" + series + "]";
  if (model.law().is_lattice()) {
    r.verdict = Verdict::lattice_caveat;
  } else {
    r.verdict = (monotone && r.statistic < r.threshold) ? Verdict::pass : Verdict::fail;
  }
  return r;
}

// ---------------------------------------------------------------------------

Estimate generator_apply(const ReproductionLaw& law, double alpha, const std::function<double(double)>& g,
                         const FinitePointMeasure& y, std::size_t budget, std::uint64_t seed) {
  const auto atoms = y.atoms();
  const std::size_t n = atoms.size();
  std::vector<double> gy(n);
  double g_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    gy[i] = g(atoms[i]);
    if (!std::isfinite(gy[i]) || gy[i] < 0.0) throw EvaluationError("g must be finite and >= 0", i, atoms[i]);
    g_total += gy[i];
  }
  // <g(x y_i), s> for one offspring configuration.
  const auto offspring_g = [&](std::span<const double> s, double yi) {
    double total = 0.0;
    for (double a : s) total += g(a * yi);
    return total;
  };
  const auto contribution = [&](std::span<const double> s) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double pref = std::pow(atoms[i], alpha) * std::exp(-(g_total - gy[i]));
      total += pref * (std::exp(-offspring_g(s, atoms[i])) - std::exp(-gy[i]));
    }
    return total;
  };

  if (const auto comps = discrete_components(law)) {
    double total = 0.0;
    for (const auto& c : *comps) total += c.prob * contribution(c.atoms);
    return {total, 0.0, 0, false};
  }
  if (budget == 0) throw DomainError("generator_apply: Monte Carlo budget must be positive");
  Stream rng(seed);
  RunningStats st;
  for (std::size_t b = 0; b < budget; ++b) st.add(contribution(law.sample(rng).atoms()));
  Estimate e = st.estimate();
  e.flagged = st.max_share() > 0.01;
  return e;
}

Estimate generator_finite_difference(const ReproductionLaw& law, double alpha,
                                     const std::function<double(double)>& g, const FinitePointMeasure& y, double h,
                                     std::size_t n, std::uint64_t seed, unsigned threads) {
  if (!(h > 0.0)) throw DomainError("step h must be > 0");
  if (n == 0) throw DomainError("need at least one replica");
  const double phi_y = std::exp(-pair(g, y));
  const auto atoms = y.atoms();
  const auto z = replicate(n, threads, [&](std::size_t i) {
    const std::uint64_t key = derive_key(seed, i);
    double g_sum = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      const auto tree = grow_to_time(atoms[j], law, alpha, h, derive_key(key, j));
      g_sum += pair(g, snapshot(tree, h));
    }
    return (std::exp(-g_sum) - phi_y) / h;
  });
  return summarize(z).estimate();
}

TestReport ks_two_sample(const std::vector<double>& a, const std::vector<double>& b, double alpha_level) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample needs two nonempty samples");
  const KsResult ks = ks_two_sample_statistic(a, b);
  TestReport r;
  r.name = "ks_two_sample";
  r.statistic = ks.statistic;
  r.threshold = alpha_level;
  r.p_value = ks.p_value;
  r.n_samples = std::min(a.size(), b.size());
  r.metadata = {{"n_a", a.size()}, {"n_b", b.size()}};
  r.verdict = ks.p_value > alpha_level ? Verdict::pass : Verdict::fail;
  r.detail = "D = " + fmt(ks.statistic) + ", p = " + fmt(ks.p_value);
  return r;
}

}  // namespace sbmc
