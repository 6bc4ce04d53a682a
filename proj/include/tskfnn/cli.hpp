#pragma once

// Command-line front end: `tskicfnn {train|predict|benchmark|inspect}`.
// Kept in the library so that tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace tskfnn::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kTrainingAborted = 4,
};

/// Runs one command.  `args` excludes the program name.  Normal output goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tskfnn::cli
