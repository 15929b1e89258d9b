#pragma once

#include <iosfwd>

namespace qbp::harness {

/// Exit codes: 0 success, 1 usage or input error, 2 solver error.
int cliMain(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

/// Configures the default logger from QBP_LOG (trace, debug, info, warn, error, off).
void configureLogging();

}  // namespace qbp::harness
