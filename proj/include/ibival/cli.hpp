#pragma once

#include <string>
#include <vector>

namespace ibival::cli {

/// Entry point behind the ibival binary. Exit codes: 0 success, 1 data or
/// validation error, 2 usage error.
int run(std::vector<std::string> args);
int run(int argc, char** argv);

}  // namespace ibival::cli
