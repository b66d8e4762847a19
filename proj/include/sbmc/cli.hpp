#pragma once

#include <iosfwd>
#include <vector>

#include "sbmc/config.hpp"

namespace sbmc::cli {

enum ExitCode : int {
  kOk = 0,
  kTestFailure = 1,
  kConfigError = 2,
  kNoMalthusianExponent = 3,
  kCapExceeded = 4,
  kUnsupportedRegime = 5,
};

// Entry point of the `sbmc` executable. Library errors are mapped onto exit
// codes here and reported on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// The commands take a validated config and may throw library errors.
int cmd_solve(const RunConfig& cfg, std::ostream& out);
int cmd_simulate_tree(const RunConfig& cfg, std::ostream& out);
int cmd_simulate_tagged(const RunConfig& cfg, std::ostream& out);

struct VerifyOptions {
  bool battery = true;            // checks on the configured law
  std::vector<int> criteria;      // numbered criteria to run as well
  double replica_scale = 1.0;
};

int cmd_verify(const RunConfig& cfg, const VerifyOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace sbmc::cli
