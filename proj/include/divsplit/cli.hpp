#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace divsplit::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConstraintsUnmet = 1;
inline constexpr int kExitInputError = 2;

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace divsplit::cli
