#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tmpnn::cli {

/// Runs one command line (args[0] is the program name). Returns the process
/// exit code: 0 on success, 1 on a runtime failure, 2 on a usage error.
/// Every failure prints exactly one "error: ..." line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tmpnn::cli
