#pragma once

#include <iosfwd>

namespace dfsim::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

/// Entry point of the dfsim tool. Results go to `out`, progress and errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dfsim::cli
