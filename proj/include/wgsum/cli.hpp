#ifndef WGSUM_CLI_HPP_
#define WGSUM_CLI_HPP_

#include <ostream>

namespace wgsum {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

/// Entry point of the `wgsum` tool.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wgsum

#endif  // WGSUM_CLI_HPP_
