#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kavg {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitInternal = 2 };

// `args` excludes the program name. Subcommands: run, sweep, bound,
// check-schedule, optimal-k, certify-oracle.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kavg
