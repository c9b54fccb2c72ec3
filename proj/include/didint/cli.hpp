#pragma once

#include <iosfwd>

namespace didint::cli {

// Entry point for `didint estimate|select|simulate|generate`. Returns the
// process exit code: 0 success, 2 input or config error, 3 estimation failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace didint::cli
