#pragma once

#include <string>
#include <vector>

namespace bbridge::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kNumerical = 3 };

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code. Diagnostics go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace bbridge::cli
