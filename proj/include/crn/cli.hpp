#pragma once

#include <string>
#include <vector>

namespace crn {

// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 non-convergence.
int run_cli(const std::vector<std::string>& args);

}  // namespace crn
