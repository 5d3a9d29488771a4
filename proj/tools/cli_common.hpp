#pragma once

namespace qprep::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPlanner = 3;
inline constexpr int kExitIo = 4;

// Parses arguments, dispatches to the chosen subcommand, and returns the
// process exit code. Never throws; all errors map to the codes above.
int run_cli(int argc, const char* const* argv);

}  // namespace qprep::cli
