#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfilgn::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitIo = 2,
  kExitNumerical = 3,
};

/// Runs the command line `args`, program name excluded. Normal output
/// goes to `out`, diagnostics to `err`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfilgn::cli
