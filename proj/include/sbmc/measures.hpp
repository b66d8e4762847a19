#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbmc/errors.hpp"

namespace sbmc {

// A finite multiset of strictly positive sizes: the state space of the chain.
//
// Atoms are kept sorted in descending order, so two measures built from the
// same multiset compare equal bit-for-bit regardless of input order.
// Non-positive sizes denote dead individuals and are dropped on construction;
// non-finite sizes are rejected.
class FinitePointMeasure {
 public:
  struct Built;

  FinitePointMeasure() = default;
  explicit FinitePointMeasure(std::vector<double> atoms);

  // Same as the constructor but also reports how many non-positive atoms were
  // dropped.
  static Built from_sizes(std::vector<double> atoms);

  std::span<const double> atoms() const { return atoms_; }
  std::size_t count() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double largest() const { return atoms_.empty() ? 0.0 : atoms_.front(); }

  // Multiset union.
  FinitePointMeasure merged(const FinitePointMeasure& other) const;
  // Every atom multiplied by c > 0.
  FinitePointMeasure scaled(double c) const;

  friend bool operator==(const FinitePointMeasure&, const FinitePointMeasure&) = default;

 private:
  std::vector<double> atoms_;
};

struct FinitePointMeasure::Built {
  FinitePointMeasure measure;
  std::size_t dropped = 0;
};

// <f, s>: f summed over the atoms, with multiplicity. Zero for the empty measure.
template <class F>
double pair(F&& f, const FinitePointMeasure& s) {
  double total = 0.0;
  const auto atoms = s.atoms();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double v = f(atoms[i]);
    if (!std::isfinite(v)) {
      throw EvaluationError("pair: non-finite value at atom " + std::to_string(i) + " (size " +
                                std::to_string(atoms[i]) + ")",
                            i, atoms[i]);
    }
    total += v;
  }
  return total;
}

// <x^p, s>. p = 0 counts atoms.
double power_mass(const FinitePointMeasure& s, double p);

void to_json(nlohmann::json& j, const FinitePointMeasure& s);
void from_json(const nlohmann::json& j, FinitePointMeasure& s);

}  // namespace sbmc
