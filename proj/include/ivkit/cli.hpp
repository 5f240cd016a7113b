#pragma once

#include <iosfwd>
#include <string_view>

namespace ivkit::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Exit codes: 0 success, 2 input or validation error, 3 degenerate
/// estimation (irrelevant instrument, rank deficiency, monotonicity).
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitEstimation = 3;

/// Runs the command line `argv` writing results to `out` and machine-readable
/// errors to `err`. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ivkit::cli
