#include "cryocurate/image.hpp"

#include <bit>
#include <functional>
#include <numeric>

#include "cryocurate/kernels.hpp"

namespace cryocurate {

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::Int8:
    case DType::UInt8: return 1;
    case DType::Int16:
    case DType::UInt16:
    case DType::Float16: return 2;
    case DType::Int32:
    case DType::UInt32:
    case DType::Float32: return 4;
    case DType::Int64:
    case DType::UInt64:
    case DType::Float64: return 8;
  }
  return 0;
}

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::Int8: return "int8";
    case DType::UInt8: return "uint8";
    case DType::Int16: return "int16";
    case DType::UInt16: return "uint16";
    case DType::Int32: return "int32";
    case DType::UInt32: return "uint32";
    case DType::Int64: return "int64";
    case DType::UInt64: return "uint64";
    case DType::Float16: return "float16";
    case DType::Float32: return "float32";
    case DType::Float64: return "float64";
  }
  return "unknown";
}

float half_to_float(std::uint16_t bits) {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  std::uint32_t exponent = (bits >> 10) & 0x1Fu;
  std::uint32_t mantissa = bits & 0x3FFu;
  std::uint32_t out;
  if (exponent == 0) {
    if (mantissa == 0) {
      out = sign;
    } else {
      // subnormal: renormalize
      int shift = 0;
      while ((mantissa & 0x400u) == 0) {
        mantissa <<= 1;
        ++shift;
      }
      mantissa &= 0x3FFu;
      out = sign | static_cast<std::uint32_t>(127 - 15 - shift + 1) << 23 | mantissa << 13;
    }
  } else if (exponent == 0x1F) {
    out = sign | 0x7F800000u | mantissa << 13;
  } else {
    out = sign | (exponent + 127 - 15) << 23 | mantissa << 13;
  }
  return std::bit_cast<float>(out);
}

std::uint16_t float_to_half(float value) {
  const std::uint32_t f = std::bit_cast<std::uint32_t>(value);
  const std::uint16_t sign = static_cast<std::uint16_t>((f >> 16) & 0x8000u);
  const std::uint32_t exponent = (f >> 23) & 0xFFu;
  std::uint32_t mantissa = f & 0x7FFFFFu;
  if (exponent == 0xFF)
    return static_cast<std::uint16_t>(sign | 0x7C00u | (mantissa != 0 ? 0x200u : 0u));
  const int e = static_cast<int>(exponent) - 127 + 15;
  if (e >= 0x1F) return static_cast<std::uint16_t>(sign | 0x7C00u);
  if (e <= 0) {
    if (e < -10) return sign;
    mantissa |= 0x800000u;
    const int shift = 14 - e;
    std::uint32_t half = mantissa >> shift;
    const std::uint32_t rem = mantissa & ((1u << shift) - 1);
    const std::uint32_t mid = 1u << (shift - 1);
    if (rem > mid || (rem == mid && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
  }
  std::uint32_t half = static_cast<std::uint32_t>(e) << 10 | mantissa >> 13;
  const std::uint32_t rem = mantissa & 0x1FFFu;
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;  // may carry into exponent
  return static_cast<std::uint16_t>(sign | half);
}

ImageArray::ImageArray(std::vector<std::size_t> shape, DType dtype)
    : shape_(std::move(shape)), dtype_(dtype) {
  bytes_.resize(element_count() * dtype_size(dtype_));
}

ImageArray::ImageArray(std::vector<std::size_t> shape, DType dtype, std::vector<std::byte> bytes)
    : shape_(std::move(shape)), dtype_(dtype), bytes_(std::move(bytes)) {
  if (bytes_.size() != element_count() * dtype_size(dtype_))
    raise(ErrorCode::InvalidArgument, "buffer of " + std::to_string(bytes_.size()) +
                                          " bytes does not match shape " + shape_to_string(shape_) +
                                          " of " + std::string(to_string(dtype_)));
}

ImageArray ImageArray::from_doubles(std::vector<std::size_t> shape, std::span<const double> values) {
  ImageArray a(std::move(shape), DType::Float32);
  if (values.size() != a.element_count())
    raise(ErrorCode::InvalidArgument, "value count does not match shape");
  kernels::narrow(values, a.mutable_values<float>());
  return a;
}

std::size_t ImageArray::element_count() const noexcept {
  if (shape_.empty()) return 0;
  return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
}

void ImageArray::check_dtype(DType wanted) const {
  if (wanted != dtype_)
    raise(ErrorCode::InvalidArgument, "array holds " + std::string(to_string(dtype_)) +
                                          ", requested " + std::string(to_string(wanted)));
}

namespace {

template <class T>
void widen_into(std::span<const std::byte> raw, std::vector<double>& out) {
  const auto* p = reinterpret_cast<const T*>(raw.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(p[i]);
}

}  // namespace

std::vector<double> ImageArray::to_double() const {
  std::vector<double> out(element_count());
  switch (dtype_) {
    case DType::Int8: widen_into<std::int8_t>(bytes_, out); break;
    case DType::UInt8: widen_into<std::uint8_t>(bytes_, out); break;
    case DType::Int16: widen_into<std::int16_t>(bytes_, out); break;
    case DType::UInt16: widen_into<std::uint16_t>(bytes_, out); break;
    case DType::Int32: widen_into<std::int32_t>(bytes_, out); break;
    case DType::UInt32: widen_into<std::uint32_t>(bytes_, out); break;
    case DType::Int64: widen_into<std::int64_t>(bytes_, out); break;
    case DType::UInt64: widen_into<std::uint64_t>(bytes_, out); break;
    case DType::Float64: widen_into<double>(bytes_, out); break;
    case DType::Float32: kernels::widen(values<float>(), out); break;
    case DType::Float16: {
      const auto* p = reinterpret_cast<const std::uint16_t*>(bytes_.data());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = half_to_float(p[i]);
      break;
    }
  }
  return out;
}

ImageArray ImageArray::reshaped(std::vector<std::size_t> shape) const {
  ImageArray copy(std::move(shape), dtype_, bytes_);
  copy.voxel_size = voxel_size;
  return copy;
}

std::string shape_to_string(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

}  // namespace cryocurate
