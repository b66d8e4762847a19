#include "sbmc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "sbmc/errors.hpp"

namespace sbmc {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

// nlohmann converts negative integers to unsigned types silently.
template <class T>
T unsigned_value(const nlohmann::json& j, const std::string& key) {
  require(j.is_number_unsigned(), key + " must be a non-negative integer");
  return j.get<T>();
}

}  // namespace

void RunConfig::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and >= 0");
  require(positive(root_size), "root_size must be > 0");
  require(replicas >= 1, "replicas must be >= 1");
  for (double t : times) require(std::isfinite(t) && t >= 0.0, "times must be finite and >= 0");
  require(positive(solver_tol), "solver_tol must be > 0");
  require(positive(tail_tol), "tail_tol must be > 0");
  require(positive(bias_allowance), "bias_allowance must be > 0");
  require(cap >= 1, "cap must be >= 1");
  require(threads >= 1, "threads must be >= 1");
  require(!out_dir.empty(), "out_dir must not be empty");
  (void)reproduction_law();
}

ReproductionLaw RunConfig::reproduction_law() const {
  try {
    return law_from_json(law);
  } catch (const InvalidLaw& e) {
    throw ConfigError(std::string("invalid law: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed law spec: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"law", c.law},
       {"alpha", c.alpha},
       {"root_size", c.root_size},
       {"seed", c.seed},
       {"replicas", c.replicas},
       {"times", c.times},
       {"generations", c.generations},
       {"solver_tol", c.solver_tol},
       {"tail_tol", c.tail_tol},
       {"bias_allowance", c.bias_allowance},
       {"cap", c.cap},
       {"out_dir", c.out_dir},
       {"threads", c.threads}};
}

RunConfig config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "config must be a JSON object");
  static const std::set<std::string> known = {"law",         "alpha",      "root_size", "seed",
                                              "replicas",    "times",      "generations", "solver_tol",
                                              "tail_tol",    "bias_allowance", "cap",     "out_dir",
                                              "threads"};
  for (const auto& [key, _] : j.items()) require(known.count(key) > 0, "unknown config key '" + key + "'");
  RunConfig c;
  try {
    if (j.contains("law")) c.law = j.at("law");
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("root_size")) c.root_size = j.at("root_size").get<double>();
    if (j.contains("seed")) c.seed = unsigned_value<std::uint64_t>(j.at("seed"), "seed");
    if (j.contains("replicas")) c.replicas = unsigned_value<std::size_t>(j.at("replicas"), "replicas");
    if (j.contains("times")) c.times = j.at("times").get<std::vector<double>>();
    if (j.contains("generations")) {
      require(j.at("generations").is_array(), "generations must be an array");
      c.generations.clear();
      for (const auto& g : j.at("generations")) c.generations.push_back(unsigned_value<std::size_t>(g, "generations"));
    }
    if (j.contains("solver_tol")) c.solver_tol = j.at("solver_tol").get<double>();
    if (j.contains("tail_tol")) c.tail_tol = j.at("tail_tol").get<double>();
    if (j.contains("bias_allowance")) c.bias_allowance = j.at("bias_allowance").get<double>();
    if (j.contains("cap")) c.cap = unsigned_value<std::size_t>(j.at("cap"), "cap");
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("threads")) c.threads = unsigned_value<unsigned>(j.at("threads"), "threads");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json parse_law_argument(const std::string& text) {
  if (text == "uniform_binary" || text == "deterministic_binary") return {{"type", text}};
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("--law expects uniform_binary, deterministic_binary or a JSON law spec, got '" + text + "'");
  }
}

}  // namespace sbmc
