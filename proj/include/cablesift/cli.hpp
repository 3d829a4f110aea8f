#pragma once

#include <string>
#include <vector>

namespace cablesift::cli {

// Default root seed recorded in every artifact.
inline constexpr std::uint64_t kDefaultSeed = 1973;

// Runs one CLI invocation; `args` excludes the program name. Exit codes:
// 0 success, 1 usage error, 2 data error, 3 internal error.
int run(std::vector<std::string> args);

}  // namespace cablesift::cli
