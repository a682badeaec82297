#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace proxy3d::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one subcommand: synth, compress, inspect, stats, align-train, loss.
/// Diagnostics go to `err`; exit 0 on success, 1 on usage errors and 2 on
/// data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// argv entry point; args[0] is the program name.
int run(int argc, char** argv);

}  // namespace proxy3d::cli
