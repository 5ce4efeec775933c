#pragma once

#include <iosfwd>

namespace thermomap {

/// Entry point of the thermomap command-line tool. Returns the process exit
/// status: 0 success, 2 configuration error, 3 runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace thermomap
