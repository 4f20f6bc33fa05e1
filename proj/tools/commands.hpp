#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pacfs::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDataError = 3,
  kNumericalError = 4,
  kBudgetExceeded = 5,
};

/// Runs the tool on `args` (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pacfs::cli
