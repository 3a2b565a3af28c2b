#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dgrel::cli {

enum ExitCode : int { ok = 0, domain_refusal = 1, input_error = 2, internal_error = 3 };

/// Runs the command line `args` (without the program name), writing results
/// to `out` unless redirected with --out, and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dgrel::cli
