#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hmdn {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,         ///< bad arguments, config or input files
    kExitVerification = 2,  ///< a check run by the command failed
};

/// Entry point of the `hmdn` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hmdn
