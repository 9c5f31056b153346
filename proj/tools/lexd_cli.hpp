#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lexd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one `lexd` invocation. args[0] is the program name. Every option
/// can also be set through the environment as LEXD_<OPTION>, with dashes
/// turned into underscores (LEXD_CORPUS, LEXD_JOBS, ...); the command line
/// wins over the environment.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lexd::cli
