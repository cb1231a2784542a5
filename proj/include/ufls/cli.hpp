#ifndef UFLS_CLI_HPP
#define UFLS_CLI_HPP

// Entry point of the `ufls` command, built as the ufls_cli library so tests
// can drive it in-process.

#include <ostream>
#include <string>
#include <vector>

namespace ufls {

enum ExitCode : int {
  kExitOk = 0,
  kExitPartial = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitInfeasible = 4,
  kExitTimeout = 5,
};

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ufls

#endif  // UFLS_CLI_HPP
