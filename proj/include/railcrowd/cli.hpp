#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace railcrowd {

/// Exit codes of the command-line tool.
enum class ExitCode : int { ok = 0, usage = 1, data = 2, internal = 3 };

/// Runs the `railcrowd` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "HH:MM[:SS]" as seconds after midnight, or a plain integer as seconds.
long long parse_clock_arg(const std::string& text);

}  // namespace railcrowd
