#pragma once

// The bnblab command line: generate, collect, train, solve, evaluate and
// crossval. Each command writes its outputs plus one manifest.json into the
// --out directory; the manifest's "argv" re-runs the command.

#include <iosfwd>
#include <string>
#include <vector>

namespace bnblab::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalFailure = 3 };

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bnblab::cli
