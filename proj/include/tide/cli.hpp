#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tide::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInternal = 3;

/// Runs one `tide` invocation. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace tide::cli
