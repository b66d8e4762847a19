#include "sbmc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "sbmc/errors.hpp"
#include "sbmc/limits.hpp"
#include "sbmc/parallel.hpp"
#include "sbmc/suite.hpp"
#include "sbmc/tagged.hpp"
#include "sbmc/tree.hpp"

namespace sbmc::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kTaggedWalk = 21;
constexpr std::uint64_t kTaggedChi = 22;
constexpr std::uint64_t kTaggedFunctional = 23;
constexpr std::uint64_t kTaggedResample = 24;

// Output file with the config as a leading comment line.
class CsvFile {
 public:
  CsvFile(const RunConfig& cfg, const std::string& name, const std::string& header)
      : path_(fs::path(cfg.out_dir) / name), os_(path_) {
    if (!os_) throw ConfigError("cannot write " + path_.string());
    os_ << std::setprecision(17);
    os_ << "# config: " << nlohmann::json(cfg).dump() << '\n' << header << '\n';
  }
  std::ostream& stream() { return os_; }

 private:
  fs::path path_;
  std::ofstream os_;
};

void prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
}

void write_json_file(const RunConfig& cfg, const std::string& name, const nlohmann::json& j) {
  std::ofstream os(fs::path(cfg.out_dir) / name);
  if (!os) throw ConfigError("cannot write " + name);
  os << j.dump(2) << '\n';
}

nlohmann::json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}, {"flagged", e.flagged}};
}

ExponentSearch search_options(const RunConfig& cfg) {
  ExponentSearch s;
  s.tol = cfg.solver_tol;
  return s;
}

template <class T, class F>
std::vector<T> collect(std::size_t n, unsigned threads, F&& f) {
  std::vector<T> out(n);
  parallel_for(n, threads, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const auto law = cfg.reproduction_law();
  const auto profile = malthusian_profile(law, search_options(cfg), cfg.seed);
  nlohmann::json j = {{"config", cfg}, {"law", law.name()}, {"profile", profile}};
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_simulate_tree(const RunConfig& cfg, std::ostream& out) {
  const auto law = cfg.reproduction_law();
  const double p0 = malthusian_exponent(law, search_options(cfg)).p0;
  prepare_out_dir(cfg);
  const std::size_t n_max = cfg.generations.empty() ? 0 : *std::max_element(cfg.generations.begin(), cfg.generations.end());
  const double t_max = cfg.times.empty() ? 0.0 : *std::max_element(cfg.times.begin(), cfg.times.end());

  struct Replica {
    std::vector<std::size_t> counts;
    std::vector<double> gen_mass;
    std::vector<FinitePointMeasure> snapshots;
  };
  const auto replicas = collect<Replica>(cfg.replicas, cfg.threads, [&](std::size_t i) {
    MarkedTree tree(law, cfg.alpha, cfg.root_size, derive_key(cfg.seed, i), cfg.cap);
    if (!cfg.generations.empty()) tree.grow_to_generation(n_max);
    if (!cfg.times.empty()) tree.grow_to_time(t_max);
    Replica r;
    for (auto n : cfg.generations) {
      r.counts.push_back(tree.generation_count(n));
      r.gen_mass.push_back(intrinsic_martingale_gen(tree, p0, n));
    }
    for (double t : cfg.times) r.snapshots.push_back(snapshot(tree, t));
    if (i == 0) {
      std::ofstream os(fs::path(cfg.out_dir) / "tree_0.jsonl");
      os << std::setprecision(17);
      os << nlohmann::json({{"config", cfg}}).dump() << '\n';
      tree.write_jsonl(os);
    }
    return r;
  });

  nlohmann::json summary = {{"config", cfg}, {"law", law.name()}, {"p0", p0}};
  if (!cfg.generations.empty()) {
    CsvFile f(cfg, "generations.csv", "replica,generation,count,M_n,extinct");
    auto rows = nlohmann::json::array();
    for (std::size_t g = 0; g < cfg.generations.size(); ++g) {
      RunningStats mass;
      RunningStats extinct;
      for (std::size_t i = 0; i < replicas.size(); ++i) {
        const auto& r = replicas[i];
        const bool dead = r.counts[g] == 0;
        f.stream() << i << ',' << cfg.generations[g] << ',' << r.counts[g] << ',' << r.gen_mass[g] << ','
                   << (dead ? 1 : 0) << '\n';
        mass.add(r.gen_mass[g]);
        extinct.add(dead ? 1.0 : 0.0);
      }
      rows.push_back({{"generation", cfg.generations[g]},
                      {"mean_M_n", estimate_json(mass.estimate())},
                      {"extinct_fraction", estimate_json(extinct.estimate())}});
    }
    summary["generations"] = rows;
  }
  if (!cfg.times.empty()) {
    CsvFile f(cfg, "times.csv", "replica,t,alive,M_t,largest");
    CsvFile atoms(cfg, "snapshots.csv", "replica,t,atom");
    auto rows = nlohmann::json::array();
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
      RunningStats alive;
      RunningStats mass;
      for (std::size_t i = 0; i < replicas.size(); ++i) {
        const auto& x = replicas[i].snapshots[k];
        const double m = power_mass(x, p0);
        f.stream() << i << ',' << cfg.times[k] << ',' << x.count() << ',' << m << ',' << x.largest() << '\n';
        for (double a : x.atoms()) atoms.stream() << i << ',' << cfg.times[k] << ',' << a << '\n';
        alive.add(static_cast<double>(x.count()));
        mass.add(m);
      }
      rows.push_back({{"t", cfg.times[k]},
                      {"mean_alive", estimate_json(alive.estimate())},
                      {"mean_M_t", estimate_json(mass.estimate())}});
    }
    summary["times"] = rows;
  }
  write_json_file(cfg, "tree_summary.json", summary);
  out << summary.dump(2) << '\n';
  return kOk;
}

int cmd_simulate_tagged(const RunConfig& cfg, std::ostream& out) {
  const auto law = cfg.reproduction_law();
  if (!(cfg.alpha > 0.0)) throw UnsupportedRegime("simulate-tagged samples I and Y, which need alpha > 0");
  const auto profile = malthusian_profile(law, search_options(cfg), cfg.seed);
  if (!(profile.kappa_prime_at_p0 > 0.0)) {
    throw UnsupportedRegime("kappa'(p0) = " + std::to_string(profile.kappa_prime_at_p0) +
                            " <= 0: the spine has no negative drift");
  }
  prepare_out_dir(cfg);
  const StepSampler steps(law, profile.p0, derive_key(cfg.seed, substream::kPool));
  const std::size_t n_steps =
      cfg.generations.empty() ? 10 : std::max<std::size_t>(1, *std::max_element(cfg.generations.begin(), cfg.generations.end()));
  nlohmann::json summary = {{"config", cfg}, {"law", law.name()}, {"profile", profile}};

  {
    const auto paths = collect<TaggedPath>(cfg.replicas, cfg.threads, [&](std::size_t i) {
      Stream rng(derive_key(derive_key(cfg.seed, kTaggedWalk), i));
      return simulate_tagged_walk(steps, cfg.alpha, cfg.root_size, n_steps, rng);
    });
    CsvFile f(cfg, "walks.csv", "replica,k,S,lifetime,birth");
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto& p = paths[i];
      for (std::size_t k = 0; k <= n_steps; ++k) {
        f.stream() << i << ',' << k << ',' << p.log_sizes[k] << ',';
        if (k < n_steps) f.stream() << p.lifetimes[k];
        f.stream() << ',' << p.birth_times[k] << '\n';
      }
    }
  }

  if (!cfg.times.empty()) {
    CsvFile walk(cfg, "chi_walk.csv", "replica,t,chi");
    CsvFile lamperti(cfg, "chi_lamperti.csv", "replica,t,chi");
    auto rows = nlohmann::json::array();
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
      const double t = cfg.times[k];
      const std::uint64_t key = derive_key(derive_key(cfg.seed, kTaggedChi), k);
      const auto a = collect<double>(cfg.replicas, cfg.threads, [&](std::size_t i) {
        Stream rng(derive_key(derive_key(key, 1), i));
        return walk_chi(steps, cfg.alpha, cfg.root_size, t, rng);
      });
      const auto b = collect<double>(cfg.replicas, cfg.threads, [&](std::size_t i) {
        Stream rng(derive_key(derive_key(key, 2), i));
        return lamperti_chi(steps, cfg.alpha, cfg.root_size, t, rng);
      });
      for (std::size_t i = 0; i < a.size(); ++i) {
        walk.stream() << i << ',' << t << ',' << a[i] << '\n';
        lamperti.stream() << i << ',' << t << ',' << b[i] << '\n';
      }
      const KsResult ks = ks_two_sample_statistic(a, b);
      rows.push_back({{"t", t}, {"ks_statistic", ks.statistic}, {"ks_p_value", ks.p_value}});
    }
    summary["chi_routes"] = rows;
  }

  {
    const ExponentialFunctional functional(law, steps, cfg.alpha, cfg.tail_tol);
    const std::size_t pool_size = std::max<std::size_t>(1000, cfg.replicas);
    const YPool pool = sample_Y(functional, pool_size, derive_key(cfg.seed, kTaggedFunctional), cfg.threads);
    {
      CsvFile f(cfg, "I.csv", "replica,I,truncation_bound");
      // Bounds are recomputed from the same streams, which reproduces the pool exactly.
      for (std::size_t i = 0; i < pool.functional.size(); ++i) {
        Stream rng(derive_key(derive_key(cfg.seed, kTaggedFunctional), i));
        const auto s = functional(rng);
        f.stream() << i << ',' << s.value << ',' << s.truncation_bound << '\n';
      }
    }
    Stream rng(derive_key(cfg.seed, kTaggedResample));
    const auto y = pool.resample(cfg.replicas, rng);
    {
      CsvFile f(cfg, "Y.csv", "replica,Y");
      for (std::size_t i = 0; i < y.size(); ++i) f.stream() << i << ',' << y[i] << '\n';
    }
    const double a = cfg.alpha;
    summary["functional"] = {
        {"mean_bound", functional.mean_bound()},
        {"mean_bound_analytic", functional.bound_is_analytic()},
        {"max_truncation_bound", pool.max_truncation},
        {"mean_inverse_I", estimate_json(pool.normalization())},
        {"alpha_m1", a * profile.m1},
        {"mean_Y_alpha", estimate_json(pool.expectation([a](double v) { return std::pow(v, a); }))},
        {"inverse_alpha_m1", 1.0 / (a * profile.m1)},
        {"ess_fraction", pool.ess_fraction()},
        {"flagged", pool.flagged()}};
  }
  write_json_file(cfg, "tagged_summary.json", summary);
  out << summary.dump(2) << '\n';
  return kOk;
}

int cmd_verify(const RunConfig& cfg, const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
  const auto law = cfg.reproduction_law();
  prepare_out_dir(cfg);
  SuiteOptions so;
  so.seed = cfg.seed;
  so.threads = cfg.threads;
  so.tail_tol = cfg.tail_tol;
  so.bias_fraction = cfg.bias_allowance;
  so.cap = cfg.cap;
  so.replica_scale = opts.replica_scale;
  so.progress = [&err](const std::string& msg) { err << "  .. " << msg << '\n'; };

  std::vector<TestReport> reports;
  auto criteria = nlohmann::json::array();
  bool ok = true;
  if (opts.battery) {
    for (auto& r : law_battery(law, cfg.alpha, so)) {
      out << std::left << std::setw(15) << ("[" + to_string(r.verdict) + "]") << r.name << "  " << r.detail << '\n';
      ok = ok && r.ok();
      reports.push_back(std::move(r));
    }
  }
  for (int id : opts.criteria) {
    auto c = run_criterion(id, so);
    out << (c.passed() ? "[PASS] " : "[FAIL] ") << std::setw(2) << id << ' ' << c.title << '\n';
    for (auto& r : c.checks) {
      out << "         " << to_string(r.verdict) << ": " << r.name << "  " << r.detail << '\n';
      r.metadata["criterion"] = id;
      reports.push_back(std::move(r));
    }
    criteria.push_back({{"id", id}, {"title", c.title}, {"passed", c.passed()}});
    ok = ok && c.passed();
  }
  write_json_file(cfg, "reports.json", {{"config", cfg}, {"criteria", criteria}, {"reports", reports}, {"ok", ok}});
  {
    std::ofstream os(fs::path(cfg.out_dir) / "reports.csv");
    os << "# config: " << nlohmann::json(cfg).dump() << '\n';
    write_reports_csv(os, reports);
  }
  out << (ok ? "all checks passed" : "some checks failed") << '\n';
  return ok ? kOk : kTestFailure;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification of self-similar branching Markov chains", "sbmc"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double alpha = 0.0;
  unsigned threads = 1;
  std::string out_dir;
  std::size_t cap = 0;
  double tail_tol = 0.0;
  std::string law_text;
  std::vector<double> times;
  std::vector<std::size_t> generations;

  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_n = app.add_option("--n", n, "number of replicas");
  auto* o_alpha = app.add_option("--alpha", alpha, "self-similarity index");
  auto* o_threads = app.add_option("--threads", threads, "worker threads");
  auto* o_out = app.add_option("--out-dir", out_dir, "output directory");
  auto* o_cap = app.add_option("--cap", cap, "node cap per tree");
  auto* o_tail = app.add_option("--tail-tol", tail_tol, "relative truncation tolerance for I");
  auto* o_law = app.add_option("--law", law_text, "law name or JSON law spec");
  auto* o_times = app.add_option("--t", times, "time horizons");
  auto* o_gens = app.add_option("--generations", generations, "generations");

  auto* solve = app.add_subcommand("solve", "Malthusian exponent and related constants");
  auto* tree = app.add_subcommand("simulate-tree", "grow marked trees and record snapshots and martingales");
  auto* tagged = app.add_subcommand("simulate-tagged", "spine walk, chi(t) by two routes, I and Y samples");
  auto* verify = app.add_subcommand("verify", "run the verification checks");
  VerifyOptions vopts;
  bool all_criteria = false;
  bool no_battery = false;
  double scale = 0.0;
  verify->add_flag("--acceptance", all_criteria, "also run every numbered criterion");
  verify->add_option("--criteria", vopts.criteria, "numbered criteria to run")
      ->check(CLI::Range(1, kCriterionCount));
  verify->add_flag("--no-battery", no_battery, "skip the checks on the configured law");
  auto* o_scale = verify->add_option("--scale", scale, "multiplier on every replica count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (o_seed->count()) cfg.seed = seed;
    if (o_n->count()) cfg.replicas = n;
    if (o_alpha->count()) cfg.alpha = alpha;
    if (o_threads->count()) cfg.threads = threads;
    if (o_out->count()) cfg.out_dir = out_dir;
    if (o_cap->count()) cfg.cap = cap;
    if (o_tail->count()) cfg.tail_tol = tail_tol;
    if (o_law->count()) cfg.law = parse_law_argument(law_text);
    if (o_times->count()) cfg.times = times;
    if (o_gens->count()) cfg.generations = generations;
    cfg.validate();

    if (solve->parsed()) return cmd_solve(cfg, out);
    if (tree->parsed()) return cmd_simulate_tree(cfg, out);
    if (tagged->parsed()) return cmd_simulate_tagged(cfg, out);
    if (all_criteria) {
      vopts.criteria.clear();
      for (int id = 1; id <= kCriterionCount; ++id) vopts.criteria.push_back(id);
    }
    vopts.battery = !no_battery;
    if (o_scale->count()) {
      vopts.replica_scale = scale;
    } else if (o_n->count()) {
      vopts.replica_scale = static_cast<double>(n) / 10'000.0;
    }
    return cmd_verify(cfg, vopts, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidLaw& e) {
    err << "invalid law: " << e.what() << '\n';
    return kConfigError;
  } catch (const NoMalthusianExponent& e) {
    err << "no Malthusian exponent: " << e.what() << " (smallest moment " << e.min_moment() << " at p = "
        << e.argmin() << ")\n";
    return kNoMalthusianExponent;
  } catch (const CapExceeded& e) {
    err << "node cap exceeded: " << e.what() << " (" << e.nodes() << " nodes, time " << e.time_reached()
        << ", generation " << e.generation_reached() << ")\n";
    return kCapExceeded;
  } catch (const UnsupportedRegime& e) {
    err << "unsupported regime: " << e.what() << '\n';
    return kUnsupportedRegime;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kTestFailure;
  }
}

}  // namespace sbmc::cli
