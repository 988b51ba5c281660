#pragma once

#include <ostream>

namespace imghash::cli {

/// Exit codes of the `imghash` tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitTampered = 1;
inline constexpr int kExitError = 2;

/// Parse argv and run one subcommand. Machine-readable output goes to `out`,
/// diagnostics and summaries to `err`. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace imghash::cli
