#pragma once

#include <gtest/gtest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "sbmc/measures.hpp"
#include "sbmc/replaw.hpp"
#include "sbmc/rng.hpp"
#include "sbmc/tree.hpp"

namespace sbmc::testgen {

// Small random-input generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * open_uniform(rng_); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin(double p = 0.5) { return open_uniform(rng_) < p; }
  std::uint64_t seed() { return rng_(); }

  std::vector<double> sizes(int max_count, double lo = 1e-3, double hi = 10.0) {
    std::vector<double> out(static_cast<std::size_t>(integer(0, max_count)));
    for (auto& x : out) x = uniform(lo, hi);
    return out;
  }

  FinitePointMeasure measure(int max_count) { return FinitePointMeasure(sizes(max_count)); }

  // A discrete law with mean offspring > 1 and all atoms in (0, 1), so that
  // kappa has a positive zero and tends to 1 at infinity.
  ReproductionLaw supercritical_discrete() {
    for (;;) {
      const int k = integer(1, 3);
      std::vector<MixtureComponent> comps;
      double total = 0.0;
      for (int i = 0; i < k; ++i) {
        MixtureComponent c;
        c.prob = uniform(0.1, 1.0);
        total += c.prob;
        const int m = integer(0, 4);
        for (int j = 0; j < m; ++j) c.atoms.push_back(uniform(0.05, 0.95));
        comps.push_back(std::move(c));
      }
      double mean = 0.0;
      for (auto& c : comps) {
        c.prob /= total;
        mean += c.prob * static_cast<double>(c.atoms.size());
      }
      if (mean > 1.1) return ReproductionLaw::discrete(std::move(comps));
    }
  }

  NodeLabel label(int max_generation, int max_index) {
    std::vector<std::uint32_t> path(static_cast<std::size_t>(integer(0, max_generation)));
    for (auto& i : path) i = static_cast<std::uint32_t>(integer(1, max_index));
    return NodeLabel(std::move(path));
  }

 private:
  Stream rng_;
};

// Runs `prop` on `cases` generated inputs; failures name the case.
template <class Prop>
void for_all(int cases, std::uint64_t seed, Prop&& prop) {
  for (int i = 0; i < cases; ++i) {
    SCOPED_TRACE("property case " + std::to_string(i));
    Gen g(derive_key(seed, static_cast<std::uint64_t>(i)));
    prop(g);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

}  // namespace sbmc::testgen
