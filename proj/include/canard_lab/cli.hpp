#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace canard::cli {

// exit codes: 0 success, 1 configuration or validation error, 2 solver failure
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

} // namespace canard::cli
