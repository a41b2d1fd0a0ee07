#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uvwprop {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitValidation = 3,
};

/// Entry point for the `uvwprop` command. Subcommands: gen, propagate,
/// metrics, query. Diagnostics go to `err` as a single line.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience for tests: args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uvwprop
