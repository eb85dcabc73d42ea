#pragma once

#include <iosfwd>

namespace vsearch::cli {

/// Parses arguments and dispatches a subcommand. Errors are reported as a
/// single "error: <Category>: <message>" line on `err`; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vsearch::cli
