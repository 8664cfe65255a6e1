#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace acrotag {

/// Runs one command. `args` excludes the program name. Returns the process
/// exit code: 0 on success, nonzero with a one-line diagnostic on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace acrotag
