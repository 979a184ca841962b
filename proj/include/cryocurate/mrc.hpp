#pragma once

// MRC2014 reader/writer.
//
// Axis convention: data is exposed as (sections, rows, columns) = (nz, ny, nx)
// exactly as stored. MAPC/MAPR/MAPS are decoded and kept in the header but
// never used to permute the array.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cryocurate/image.hpp"

namespace cryocurate::mrc {

inline constexpr std::size_t kHeaderBytes = 1024;
inline constexpr std::size_t kLabelCount = 10;
inline constexpr std::size_t kLabelBytes = 80;

enum class Mode : std::int32_t {
  Int8 = 0,
  Int16 = 1,
  Float32 = 2,
  UInt16 = 6,
  Float16 = 12,
};

bool is_supported_mode(std::int32_t mode);
DType dtype_for_mode(Mode mode);

struct MrcHeader {
  std::int32_t nx = 0, ny = 0, nz = 0;
  std::int32_t mode = 2;
  std::int32_t nxstart = 0, nystart = 0, nzstart = 0;
  std::int32_t mx = 0, my = 0, mz = 0;
  std::array<float, 3> cella{};
  std::array<float, 3> cellb{90.0f, 90.0f, 90.0f};
  std::int32_t mapc = 1, mapr = 2, maps = 3;
  float dmin = 0, dmax = 0, dmean = 0;
  std::int32_t ispg = 0;
  std::int32_t nsymbt = 0;
  /// Words 25-49 verbatim (EXTRA, EXTTYP, NVERSION live here).
  std::array<std::byte, 100> extra{};
  std::array<float, 3> origin{};
  std::array<std::uint8_t, 4> machine_stamp{0x44, 0x44, 0x00, 0x00};
  float rms = 0;
  std::int32_t nlabl = 0;
  std::array<std::string, kLabelCount> labels;

  std::string exttyp() const;
  std::int32_t nversion() const;
  bool big_endian() const noexcept { return machine_stamp[0] == 0x11; }

  /// cella / m per axis, or nullopt when any sampling count is zero.
  std::optional<VoxelSize> voxel_size() const;
};

struct MrcFile {
  MrcHeader header;
  std::vector<std::byte> extended_header;
  ImageArray data;
};

/// Decodes a complete MRC2014 file. Big-endian files (machine stamp 0x11)
/// are converted to native order.
MrcFile read_mrc(std::span<const std::byte> bytes);

/// Parses only the 1024-byte header.
MrcHeader read_header(std::span<const std::byte> bytes);

/// Encodes `data` (rank 1-3) as a little-endian MRC2014 file with statistics
/// recomputed from the data. Float16 input is promoted to mode 2; dtypes
/// without an MRC mode raise UnsupportedDtype.
std::vector<std::byte> write_mrc(const ImageArray& data,
                                 std::optional<VoxelSize> voxel_size = std::nullopt);

/// Re-encodes a decoded file, keeping its labels, origin, symmetry and
/// extended header while recomputing shape and statistics from `file.data`.
std::vector<std::byte> write_mrc(const MrcFile& file);

struct Statistics {
  double min = 0, max = 0, mean = 0, rms = 0;
};

/// dmin/dmax/dmean and RMS deviation from the mean, accumulated in double.
Statistics compute_statistics(const ImageArray& data);

}  // namespace cryocurate::mrc
