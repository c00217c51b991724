#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace chakra {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDeadlock = 3,
};

// Runs the `chakra` command line. args[0] is the program name. Data goes to
// `out` (or to files named by flags), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace chakra
