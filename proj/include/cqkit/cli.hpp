#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cqkit {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitGeneratorOrIo = 3,
};

/// Runs one command line (args[0] is the program name). Never throws; every
/// failure maps onto an ExitCode with a message on `err`.
int run_cli(const std::vector<std::string> &args, std::ostream &out,
            std::ostream &err);

} // namespace cqkit
