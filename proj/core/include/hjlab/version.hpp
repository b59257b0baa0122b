#pragma once

#include <string>

namespace hjlab {

std::string version();
/// Versions of the libraries the core was built against.
std::string eigen_version();
std::string compiler_version();

}  // namespace hjlab
