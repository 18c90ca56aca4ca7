#pragma once

// The `wadebench` command line, callable in-process for testing.

#include <iosfwd>

namespace wadebench::cli {

/// Exit status: 0 on success, 2 on a usage error, 1 on any other failure.
/// Errors go to `err` as "error[<code>]: <message>".
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int main(int argc, const char* const* argv);

}  // namespace wadebench::cli
