#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stabilab::cli {

inline constexpr std::uint64_t kDefaultSeed = 8;

/// Runs the tool with the given arguments (program name excluded).
/// Exit codes: 0 success, 2 usage error, 3 runtime/estimation error.
int run(const std::vector<std::string>& args);

}  // namespace stabilab::cli
