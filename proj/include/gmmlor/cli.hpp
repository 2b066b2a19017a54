#pragma once

#include <string>
#include <vector>

namespace gmmlor::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
    kOk = 0,
    kBadArgs = 2,
    kBadInput = 3,
    kNumericFailure = 4,
    kMaxIterations = 5,
    kComponentDeath = 6,
};

/// Entry point for `gmmlor <generate|fit|evaluate|replicate> ...`.
/// Returns the process exit code; never throws.
int run(int argc, const char* const* argv);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace gmmlor::cli
