#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cryocurate/image.hpp"
#include "json.hpp"

namespace cryocurate::testing {

std::filesystem::path fixture_path(const std::string& relative);
std::vector<std::byte> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::vector<std::byte> to_bytes(const std::string& s);
std::string to_string(const std::vector<std::byte>& b);

/// expected.json produced by fixtures/generate.py.
const nlohmann::json& expected();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "cryocurate");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random array of the given dtype with shape (nz, ny, nx), each axis in
/// [1, max_dim]. Integer dtypes cover their full range; floats are finite.
ImageArray random_array(std::mt19937_64& rng, DType dtype, std::size_t max_dim);

/// Statistics computed in long double with straightforward loops.
struct OracleStats {
  long double min, max, mean, rms;
};
OracleStats brute_force_stats(const ImageArray& a);

/// Converts a little-endian MRC file to its big-endian twin without using
/// the library: swaps every numeric header word and each data element.
std::vector<std::byte> mrc_to_big_endian(std::vector<std::byte> le, std::size_t element_size);

}  // namespace cryocurate::testing
