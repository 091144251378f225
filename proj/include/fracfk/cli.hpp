#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fracfk {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitInvalid = 2,
  kExitUsage = 64,
};

// args excludes the program name: {subcommand, options...}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// JSON text of the built-in default configuration.
std::string default_config_text();

}  // namespace fracfk
