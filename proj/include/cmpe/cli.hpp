#pragma once

#include <string>
#include <vector>

namespace cmpe::cli {

// Dispatches one CLI invocation (args excludes the program name).
// Exit codes: 0 success, 1 missing inputs / runtime failure, 2 usage error.
int run(const std::vector<std::string>& args);

}  // namespace cmpe::cli
