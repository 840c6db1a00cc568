#pragma once

#include <iosfwd>

namespace tkz::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3 };

/// Entry point of the `tkz` command; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tkz::cli
