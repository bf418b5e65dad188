#pragma once

#include <iosfwd>

namespace gmmsgd::cli {

/// Exit codes of the command line tool.
inline constexpr int kOk = 0;
inline constexpr int kViolation = 1;  // run finished but an invariant failed
inline constexpr int kUsage = 2;      // bad arguments or config
inline constexpr int kFailure = 3;    // numerical or I/O error

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gmmsgd::cli
