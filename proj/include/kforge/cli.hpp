#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kforge {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInfrastructure = 1, kExitUsage = 2 };

/// Runs the tool with `args` (program name excluded), writing to `out` and `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace kforge
