#pragma once

#include <iostream>
#include <string>

namespace qecdm {

inline constexpr int kModelRevision = 1;

std::string version_string();

// Exit codes: 0 success, 1 simulation error, 2 invalid configuration,
// 3 no threshold crossing in the grid (curve files are still written).
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace qecdm
