#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rwtrace::cli {

// Runs one invocation. Failures are reported on `err` as a single JSON object and
// a nonzero exit code is returned.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rwtrace::cli
