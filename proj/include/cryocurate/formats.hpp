#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "cryocurate/image.hpp"

namespace cryocurate {

enum class FileFormat { Mrc, Npy, Star, Opaque };

std::string_view to_string(FileFormat format);

/// MRC and NPY are recognized by magic bytes. STAR needs a .star filename
/// hint and text that opens (after comments and blank lines) with data_.
/// Everything else, including TIFF and EER payloads, is Opaque.
FileFormat detect_format(std::span<const std::byte> bytes, std::string_view filename_hint = {});

/// Decodes MRC or NPY bytes into an array. Other formats raise DecodeError
/// mentioning `name`.
ImageArray decode_image(std::span<const std::byte> bytes, std::string_view name = {});

}  // namespace cryocurate
