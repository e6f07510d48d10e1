#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dsmplan {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 1;
inline constexpr int kExitInputError = 2;

// Runs one `dsmplan` invocation; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsmplan
