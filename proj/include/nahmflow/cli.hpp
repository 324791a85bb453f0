#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nahmflow/solver.hpp"

namespace nahmflow::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNoConvergence = 2,
  kChecksFailed = 3,
};

/// One parsed command line.
struct RunSpec {
  std::string command;  // map, solve, verify, slice, oracle, spectra
  std::string input;    // configuration file; empty when random_n is set
  int random_n = 0;     // seeded random configuration of this size instead
  std::string rho = "regular";
  SolverConfig overrides;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<double> threshold;  // verify: replaces every check threshold
  double d = 2.0;                   // oracle: separation of the two points
};

/// Default seed: NAHMFLOW_SEED if set and valid, else 1.
std::uint64_t default_seed();

/// Parses argv-style arguments (args[0] is the program name). Throws
/// InputError with CLI11's message on bad usage.
RunSpec parse_args(const std::vector<std::string>& args);

/// Executes a command; returns the exit code. Errors go to `err`.
int run(const RunSpec& req, std::ostream& out, std::ostream& err);

/// parse_args + run, mapping parse failures and --help to exit codes.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nahmflow::cli
