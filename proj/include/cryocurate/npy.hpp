#pragma once

// NPY format version 1.0 (C order). Reading also accepts versions 2.0 and
// 3.0 headers and big-endian descriptors, which are converted to native
// order; writing always produces version 1.0 little-endian output laid out
// byte-for-byte as numpy.save does.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cryocurate/image.hpp"

namespace cryocurate::npy {

ImageArray read_npy(std::span<const std::byte> bytes);
std::vector<std::byte> write_npy(const ImageArray& array);

/// numpy dtype descriptor, e.g. "<f4" or "|u1".
std::string descriptor(DType dtype);

}  // namespace cryocurate::npy
