#pragma once

#include <iosfwd>

namespace veriscribe::cli {

/// Runs the command line. Exit codes: 0 success, 1 validation or data
/// errors, 2 usage errors. Data goes to `out` or files, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace veriscribe::cli
