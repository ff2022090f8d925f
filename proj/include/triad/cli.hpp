#pragma once

#include <string>
#include <vector>

namespace triad::cli {

/// Exit codes: 0 success, 2 config error, 3 data error, 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

int run(int argc, const char* const* argv);
/// args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace triad::cli
