#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tpr::cli {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kShape = 4 };

/// Runs one command line (without the program name). Result JSON goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tpr::cli
