#pragma once

#include <iostream>

namespace iontrap {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 anything else.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace iontrap
