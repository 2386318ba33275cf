#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace swgf::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
  kExitUnsafeStep = 5,
};

/// Runs the tool on argv[1..] (the program name is not included). Reports go
/// to `out`, errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swgf::cli
