#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vulnscape::cli {

/// Runs one CLI invocation.  `args` excludes the program name.  Returns 0 on
/// success, 1 for usage and validation errors, 2 for runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vulnscape::cli
