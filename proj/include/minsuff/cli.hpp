#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace minsuff::cli {

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`. Returns the process exit code: 0 on success or a
/// verdict, 1 on input errors, 2 on numerical-validation failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace minsuff::cli
