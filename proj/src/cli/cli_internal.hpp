#pragma once

#include <filesystem>
#include <string>

#include "cryocurate/cli.hpp"

namespace cryocurate::cli {

/// Replaces a leading "~" with $HOME from `env`.
std::filesystem::path expand_home(const std::string& path, const Environment& env);

}  // namespace cryocurate::cli
