#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tailar::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kData = 2,
    kNumerical = 3,
};

/// Runs the command line `args` (args[0] is the program name). Results go to
/// the files named by -o, or to `out` when -o is absent; diagnostics go to
/// `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tailar::cli
