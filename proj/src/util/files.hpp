#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace cryocurate::util {

/// Whole file as bytes in a string. Raises IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes to a unique temporary sibling and renames it over `path`, so
/// readers never observe a partial file. Creates parent directories.
void atomic_write(const std::filesystem::path& path, std::string_view data);

/// Creates `dir` recursively and checks that files can be created in it.
/// Raises PermissionDenied or IoError.
void ensure_writable_directory(const std::filesystem::path& dir);

std::string lower(std::string_view s);
std::string upper(std::string_view s);

}  // namespace cryocurate::util
