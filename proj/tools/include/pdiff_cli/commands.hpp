#pragma once

#include <ostream>

namespace pdiff_cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNumericError = 3,
  kVerificationFailed = 4,
};

/// Full command-line entry point (argv[0] is ignored). Messages go to
/// `out` / `err`; the return value is the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pdiff_cli
