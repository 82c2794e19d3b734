#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace klturb::cli {

/// Exit codes: 0 success, 1 validation failure, 2 numerical failure.
enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_numerical = 2 };

/// Runs one subcommand. `args` excludes the program name. Reports go to files or `out`;
/// failures are written to `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace klturb::cli
