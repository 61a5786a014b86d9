#pragma once

#include <iosfwd>

namespace rntraj::cli {

/// Runs one subcommand. Returns 0 on success, 2 on a usage error and 1 on
/// any other failure, after printing `error: <kind>: <message>` to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rntraj::cli
