#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jlse::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kDiverged = 3,
};

/// Runs one command line, without the program name: {"train", "--data", ...}.
/// Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jlse::cli
