#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctm::cli {

/// Process exit statuses.
enum ExitCode : int {
  kVerified = 0,
  kError = 1,
  kUsage = 2,
  kUnverified = 3,
};

/// Runs one invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctm::cli
