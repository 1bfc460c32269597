#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace robustcov::cli {

/// Exit codes.
enum Exit : int { kOk = 0, kUsage = 2, kDegenerate = 3, kInternal = 1 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace robustcov::cli
