#include "cryocurate/npy.hpp"

#include <cctype>
#include <cstring>
#include <optional>

#include "cryocurate/kernels.hpp"

namespace cryocurate::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;
constexpr std::size_t kGrowthDigits = 21;

struct Descr {
  DType dtype;
  bool big_endian;
};

std::optional<Descr> parse_descr(const std::string& d) {
  if (d.size() != 3) return std::nullopt;
  const char order = d[0];
  if (order != '<' && order != '>' && order != '|' && order != '=') return std::nullopt;
  const char kind = d[1];
  const int width = d[2] - '0';
  DType dtype;
  if (kind == 'i' && width == 1) dtype = DType::Int8;
  else if (kind == 'u' && width == 1) dtype = DType::UInt8;
  else if (kind == 'i' && width == 2) dtype = DType::Int16;
  else if (kind == 'u' && width == 2) dtype = DType::UInt16;
  else if (kind == 'i' && width == 4) dtype = DType::Int32;
  else if (kind == 'u' && width == 4) dtype = DType::UInt32;
  else if (kind == 'i' && width == 8) dtype = DType::Int64;
  else if (kind == 'u' && width == 8) dtype = DType::UInt64;
  else if (kind == 'f' && width == 2) dtype = DType::Float16;
  else if (kind == 'f' && width == 4) dtype = DType::Float32;
  else if (kind == 'f' && width == 8) dtype = DType::Float64;
  else return std::nullopt;
  return Descr{dtype, order == '>' && width > 1};
}

// Minimal reader for the Python-literal header dictionary numpy writes.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : s_(text) {}

  void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
    bool have_descr = false, have_fortran = false, have_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') break;
      const std::string key = quoted();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = quoted();
        have_descr = true;
      } else if (key == "fortran_order") {
        fortran = boolean();
        have_fortran = true;
      } else if (key == "shape") {
        shape = tuple();
        have_shape = true;
      } else {
        fail("unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    if (!have_descr || !have_fortran || !have_shape)
      fail("header must define descr, fortran_order and shape");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    raise(ErrorCode::BadNpyHeader, "NPY header: " + what + " at offset " + std::to_string(pos_));
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string quoted() {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected string");
    const auto end = s_.find(q, pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }
  bool boolean() {
    if (s_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  std::vector<std::size_t> tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected dimension");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) v = v * 10 + (s_[pos_++] - '0');
      if (peek() == 'L') ++pos_;
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string shape_repr(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

void byteswap(std::span<std::byte> data, std::size_t width) {
  if (width == 2) {
    kernels::byteswap16(data);
  } else if (width == 4) {
    kernels::byteswap32(data);
  } else if (width == 8) {
    for (std::size_t i = 0; i + 8 <= data.size(); i += 8)
      for (std::size_t a = 0; a < 4; ++a) std::swap(data[i + a], data[i + 7 - a]);
  }
}

}  // namespace

std::string descriptor(DType dtype) {
  switch (dtype) {
    case DType::Int8: return "|i1";
    case DType::UInt8: return "|u1";
    case DType::Int16: return "<i2";
    case DType::UInt16: return "<u2";
    case DType::Int32: return "<i4";
    case DType::UInt32: return "<u4";
    case DType::Int64: return "<i8";
    case DType::UInt64: return "<u8";
    case DType::Float16: return "<f2";
    case DType::Float32: return "<f4";
    case DType::Float64: return "<f8";
  }
  return "";
}

ImageArray read_npy(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    raise(ErrorCode::BadNpyHeader, "missing \\x93NUMPY magic");
  const auto major = std::to_integer<unsigned>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (major == 1) {
    header_len = std::to_integer<std::size_t>(bytes[8]) |
                 std::to_integer<std::size_t>(bytes[9]) << 8;
    prefix = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) raise(ErrorCode::BadNpyHeader, "truncated NPY preamble");
    for (std::size_t i = 0; i < 4; ++i)
      header_len |= std::to_integer<std::size_t>(bytes[8 + i]) << (8 * i);
    prefix = 12;
  } else {
    raise(ErrorCode::BadNpyHeader, "unsupported NPY version " + std::to_string(major));
  }
  if (bytes.size() < prefix + header_len)
    raise(ErrorCode::BadNpyHeader, "NPY header extends past end of file");

  const std::string_view text(reinterpret_cast<const char*>(bytes.data()) + prefix, header_len);
  std::string descr;
  bool fortran = false;
  std::vector<std::size_t> shape;
  HeaderParser(text).parse(descr, fortran, shape);
  if (fortran) raise(ErrorCode::FortranOrderUnsupported, "fortran_order=True arrays are not supported");
  const auto parsed = parse_descr(descr);
  if (!parsed) raise(ErrorCode::UnsupportedDtype, "unsupported NPY dtype '" + descr + "'");

  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  const std::size_t width = dtype_size(parsed->dtype);
  const std::size_t offset = prefix + header_len;
  if (bytes.size() - offset < count * width)
    raise(ErrorCode::TruncatedData, "NPY data needs " + std::to_string(count * width) +
                                        " bytes, file has " + std::to_string(bytes.size() - offset));
  std::vector<std::byte> raw(bytes.begin() + offset, bytes.begin() + offset + count * width);
  if (parsed->big_endian) byteswap(raw, width);
  // 0-d arrays are carried as a single-element vector.
  if (shape.empty()) shape.push_back(1);
  return ImageArray(std::move(shape), parsed->dtype, std::move(raw));
}

std::vector<std::byte> write_npy(const ImageArray& array) {
  std::string header = "{'descr': '" + descriptor(array.dtype()) +
                       "', 'fortran_order': False, 'shape': " + shape_repr(array.shape()) + ", }";
  if (!array.shape().empty())
    header.append(kGrowthDigits - std::to_string(array.shape().front()).size(), ' ');
  const std::size_t hlen = header.size() + 1;
  const std::size_t padlen = kAlign - ((kMagicLen + 2 + 2 + hlen) % kAlign);
  header.append(padlen, ' ');
  header.push_back('\n');
  if (header.size() > 0xFFFF) raise(ErrorCode::InvalidArgument, "NPY header too long for v1.0");

  std::vector<std::byte> out;
  out.reserve(10 + header.size() + array.bytes().size());
  for (std::size_t i = 0; i < kMagicLen; ++i) out.push_back(static_cast<std::byte>(kMagic[i]));
  out.push_back(std::byte{1});
  out.push_back(std::byte{0});
  out.push_back(static_cast<std::byte>(header.size() & 0xFF));
  out.push_back(static_cast<std::byte>(header.size() >> 8));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  out.insert(out.end(), array.bytes().begin(), array.bytes().end());
  return out;
}

}  // namespace cryocurate::npy
