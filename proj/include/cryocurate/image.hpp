#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cryocurate/error.hpp"

namespace cryocurate {

enum class DType {
  Int8,
  UInt8,
  Int16,
  UInt16,
  Int32,
  UInt32,
  Int64,
  UInt64,
  Float16,
  Float32,
  Float64,
};

std::size_t dtype_size(DType dtype);
std::string_view to_string(DType dtype);

// Element type <-> DType mapping. Float16 is carried as raw uint16 bits, so
// it has no C++ element type here; use to_double() to read it.
template <class T> struct dtype_of;
template <> struct dtype_of<std::int8_t> { static constexpr DType value = DType::Int8; };
template <> struct dtype_of<std::uint8_t> { static constexpr DType value = DType::UInt8; };
template <> struct dtype_of<std::int16_t> { static constexpr DType value = DType::Int16; };
template <> struct dtype_of<std::uint16_t> { static constexpr DType value = DType::UInt16; };
template <> struct dtype_of<std::int32_t> { static constexpr DType value = DType::Int32; };
template <> struct dtype_of<std::uint32_t> { static constexpr DType value = DType::UInt32; };
template <> struct dtype_of<std::int64_t> { static constexpr DType value = DType::Int64; };
template <> struct dtype_of<std::uint64_t> { static constexpr DType value = DType::UInt64; };
template <> struct dtype_of<float> { static constexpr DType value = DType::Float32; };
template <> struct dtype_of<double> { static constexpr DType value = DType::Float64; };

float half_to_float(std::uint16_t bits);
std::uint16_t float_to_half(float value);

/// Voxel spacing in Angstrom, ordered (x, y, z).
using VoxelSize = std::array<double, 3>;

/// Dense C-order numeric array. Images decoded from MRC are always rank 3
/// (sections, rows, columns); a 2D image has one section.
class ImageArray {
 public:
  ImageArray() = default;
  /// Zero-filled array.
  ImageArray(std::vector<std::size_t> shape, DType dtype);
  /// Takes ownership of `bytes`; its length must equal element_count * size.
  ImageArray(std::vector<std::size_t> shape, DType dtype, std::vector<std::byte> bytes);

  template <class T>
  static ImageArray from_values(std::vector<std::size_t> shape, std::span<const T> values) {
    ImageArray a(std::move(shape), dtype_of<T>::value);
    if (values.size() != a.element_count())
      raise(ErrorCode::InvalidArgument, "value count does not match shape");
    std::memcpy(a.bytes_.data(), values.data(), a.bytes_.size());
    return a;
  }

  /// Stores `values` as Float32.
  static ImageArray from_doubles(std::vector<std::size_t> shape, std::span<const double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  DType dtype() const noexcept { return dtype_; }
  std::size_t element_count() const noexcept;
  bool empty() const noexcept { return element_count() == 0; }

  // Trailing three axes; missing leading axes read as 1.
  std::size_t nx() const noexcept { return axis_from_end(0); }
  std::size_t ny() const noexcept { return axis_from_end(1); }
  std::size_t nz() const noexcept { return axis_from_end(2); }

  std::span<const std::byte> bytes() const noexcept { return bytes_; }
  std::span<std::byte> mutable_bytes() noexcept { return bytes_; }

  template <class T>
  std::span<const T> values() const {
    check_dtype(dtype_of<T>::value);
    return {reinterpret_cast<const T*>(bytes_.data()), element_count()};
  }
  template <class T>
  std::span<T> mutable_values() {
    check_dtype(dtype_of<T>::value);
    return {reinterpret_cast<T*>(bytes_.data()), element_count()};
  }

  std::vector<double> to_double() const;

  /// Same data, different shape with an equal element count.
  ImageArray reshaped(std::vector<std::size_t> shape) const;

  std::optional<VoxelSize> voxel_size;

  /// Compares shape, dtype and raw bytes; voxel_size is metadata and ignored.
  friend bool operator==(const ImageArray& a, const ImageArray& b) {
    return a.shape_ == b.shape_ && a.dtype_ == b.dtype_ && a.bytes_ == b.bytes_;
  }

 private:
  std::size_t axis_from_end(std::size_t k) const noexcept {
    return k < shape_.size() ? shape_[shape_.size() - 1 - k] : 1;
  }
  void check_dtype(DType wanted) const;

  std::vector<std::size_t> shape_;
  DType dtype_ = DType::Float32;
  std::vector<std::byte> bytes_;
};

std::string shape_to_string(std::span<const std::size_t> shape);

}  // namespace cryocurate
