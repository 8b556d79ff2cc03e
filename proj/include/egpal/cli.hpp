#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace egpal {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,      // unknown flag, bad config
  kExitNumerical = 3,  // factorization or other numerical breakdown
};

/// Entry point of the `egpal` tool. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace egpal
