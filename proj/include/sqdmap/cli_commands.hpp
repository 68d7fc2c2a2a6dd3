#pragma once

#include <string>
#include <vector>

namespace sqdmap::cli {

/// Full command dispatcher. Exit codes: 0 success, 1 usage error, 2 input
/// error, 3 internal error. The SQDMAP_SEED environment variable supplies
/// the default seed when --seed is omitted.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace sqdmap::cli
