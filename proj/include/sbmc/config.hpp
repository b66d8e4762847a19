#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbmc/replaw.hpp"
#include "sbmc/tree.hpp"

namespace sbmc {

// Everything a run needs. Round-trips through JSON; every output file carries
// a copy so a run can be reproduced from its results.
struct RunConfig {
  nlohmann::json law = {{"type", "uniform_binary"}};
  double alpha = 1.0;
  double root_size = 1.0;
  std::uint64_t seed = 42;
  std::size_t replicas = 1000;
  std::vector<double> times = {1.0};
  std::vector<std::size_t> generations = {8};
  double solver_tol = 1e-12;
  double tail_tol = 1e-6;
  double bias_allowance = 0.05;
  std::size_t cap = MarkedTree::kDefaultCap;
  std::string out_dir = ".";
  unsigned threads = 1;

  // Throws ConfigError on the first invalid field (including the law).
  void validate() const;
  ReproductionLaw reproduction_law() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Missing keys keep their defaults; unknown keys and wrong types are
// ConfigErrors. The result is validated.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Accepts a law name ("uniform_binary", "deterministic_binary") or a JSON law
// spec.
nlohmann::json parse_law_argument(const std::string& text);

}  // namespace sbmc
