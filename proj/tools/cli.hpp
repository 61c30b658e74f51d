#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qfc::cli {

/// Runs one command line (without the program name). Returns 0 on success,
/// 2 on a usage error and 1 when the computation fails.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qfc::cli
