#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evacsim::cli {

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;     // bad flags, bad values, malformed log rows
inline constexpr int kExitScenario = 2;  // scenario missing or invalid

/// Entry point behind the `evacsim` binary. `args` excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evacsim::cli
