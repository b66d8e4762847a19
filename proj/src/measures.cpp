#include "sbmc/measures.hpp"

#include <algorithm>
#include <functional>

namespace sbmc {

FinitePointMeasure::FinitePointMeasure(std::vector<double> atoms) {
  *this = from_sizes(std::move(atoms)).measure;
}

FinitePointMeasure::Built FinitePointMeasure::from_sizes(std::vector<double> atoms) {
  Built out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i])) {
      throw DomainError("FinitePointMeasure: atom " + std::to_string(i) + " is not finite");
    }
  }
  const auto dead = std::remove_if(atoms.begin(), atoms.end(), [](double a) { return a <= 0.0; });
  out.dropped = static_cast<std::size_t>(atoms.end() - dead);
  atoms.erase(dead, atoms.end());
  std::sort(atoms.begin(), atoms.end(), std::greater<>());
  out.measure.atoms_ = std::move(atoms);
  return out;
}

FinitePointMeasure FinitePointMeasure::merged(const FinitePointMeasure& other) const {
  FinitePointMeasure out;
  out.atoms_.resize(atoms_.size() + other.atoms_.size());
  std::merge(atoms_.begin(), atoms_.end(), other.atoms_.begin(), other.atoms_.end(),
             out.atoms_.begin(), std::greater<>());
  return out;
}

FinitePointMeasure FinitePointMeasure::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw DomainError("FinitePointMeasure::scaled: factor must be positive and finite");
  }
  FinitePointMeasure out = *this;
  for (auto& a : out.atoms_) a *= c;
  return out;
}

double power_mass(const FinitePointMeasure& s, double p) {
  if (p == 1.0) {
    return pair([](double x) { return x; }, s);
  }
  return pair([p](double x) { return std::pow(x, p); }, s);
}

void to_json(nlohmann::json& j, const FinitePointMeasure& s) {
  j = nlohmann::json::array();
  for (double a : s.atoms()) j.push_back(a);
}

void from_json(const nlohmann::json& j, FinitePointMeasure& s) {
  if (!j.is_array()) throw DomainError("point measure JSON must be an array of numbers");
  std::vector<double> atoms;
  atoms.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw DomainError("point measure JSON must be an array of numbers");
    atoms.push_back(v.get<double>());
  }
  s = FinitePointMeasure(std::move(atoms));
}

}  // namespace sbmc
