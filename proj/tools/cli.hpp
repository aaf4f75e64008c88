#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace respq {

/// Runs one command line (args[0] is the program name). Errors are reported
/// on `err` as a single `error: <Code>: <detail>` line; returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace respq
