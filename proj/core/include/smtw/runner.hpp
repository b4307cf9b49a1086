#pragma once

#include <cstdint>
#include <iosfwd>

namespace smtw {

// Exit codes, sysexits-flavored so failure classes are distinguishable in
// scripts. kExitVerifyFailed is reserved for `verify` reporting red checks.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitUsage = 64,        // unknown flags, bad values
  kExitDataFormat = 65,   // malformed files, format_version mismatch
  kExitMissingInput = 66, // input file not found
  kExitOverlap = 69,      // train/test instance sets intersect
  kExitFailure = 70,      // training aborted (divergence, non-finite values)
  kExitIo = 74,
};

// Entry point shared by the CLI binary and tests.
int run_cli(int argc, const char* const* argv);

// The `verify` subcommand: fast self-checks of the simulator, scripts and
// numerical core. Prints one line per check; returns the number of failures.
int run_verification(std::ostream& out, uint64_t master_seed);

}  // namespace smtw
