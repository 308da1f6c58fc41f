#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace charcoal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// Runs `charcoal <command> ...` with args[0] the program name. Results go to
// files or `out`, diagnostics to `err`. Never throws; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace charcoal::cli
