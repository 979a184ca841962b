#include "cryocurate/mrc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cryocurate/kernels.hpp"

namespace cryocurate::mrc {
namespace {

constexpr std::size_t kMapOffset = 208;
constexpr std::size_t kStampOffset = 212;

template <class T>
T load(const std::byte* header, std::size_t offset) {
  T v;
  std::memcpy(&v, header + offset, sizeof(T));
  return v;
}

template <class T>
void store(std::byte* header, std::size_t offset, T v) {
  std::memcpy(header + offset, &v, sizeof(T));
}

std::int32_t swapped_i32(std::int32_t v) {
  auto u = static_cast<std::uint32_t>(v);
  u = (u >> 24) | ((u >> 8) & 0xFF00u) | ((u << 8) & 0xFF0000u) | (u << 24);
  return static_cast<std::int32_t>(u);
}

bool plausible(std::int32_t nx, std::int32_t mode) {
  return nx > 0 && nx < (1 << 24) && is_supported_mode(mode);
}

// Decides byte order from the machine stamp, falling back to a sanity check
// of NX and MODE for files that leave the stamp zeroed.
bool detect_big_endian(const std::byte* h) {
  const auto s0 = std::to_integer<std::uint8_t>(h[kStampOffset]);
  const auto s1 = std::to_integer<std::uint8_t>(h[kStampOffset + 1]);
  if (s0 == 0x11 && s1 == 0x11) return true;
  if (s0 == 0x44 && (s1 == 0x44 || s1 == 0x41)) return false;
  const auto nx = load<std::int32_t>(h, 0);
  const auto mode = load<std::int32_t>(h, 12);
  if (plausible(nx, mode)) return false;
  return plausible(swapped_i32(nx), swapped_i32(mode));
}

std::string trim_label(const std::byte* p) {
  std::string s(reinterpret_cast<const char*>(p), kLabelBytes);
  const auto end = s.find_last_not_of(std::string(" \0", 2));
  return end == std::string::npos ? std::string() : s.substr(0, end + 1);
}

std::optional<Mode> mode_for_dtype(DType dtype) {
  switch (dtype) {
    case DType::Int8: return Mode::Int8;
    case DType::Int16: return Mode::Int16;
    case DType::Float32: return Mode::Float32;
    case DType::UInt16: return Mode::UInt16;
    case DType::Float16: return Mode::Float32;  // promoted
    default: return std::nullopt;
  }
}

ImageArray promote_half(const ImageArray& a) {
  if (a.dtype() != DType::Float16) return a;
  const auto values = a.to_double();
  ImageArray out = ImageArray::from_doubles(a.shape(), values);
  out.voxel_size = a.voxel_size;
  return out;
}

std::array<std::int32_t, 3> dims_of(const ImageArray& a) {
  if (a.rank() < 1 || a.rank() > 3)
    raise(ErrorCode::InvalidArgument,
          "MRC data must have rank 1-3, got shape " + shape_to_string(a.shape()));
  for (std::size_t d : a.shape())
    if (d == 0 || d > static_cast<std::size_t>(INT32_MAX))
      raise(ErrorCode::InvalidArgument, "MRC dimensions must be in 1..2^31-1, got shape " +
                                            shape_to_string(a.shape()));
  return {static_cast<std::int32_t>(a.nx()), static_cast<std::int32_t>(a.ny()),
          static_cast<std::int32_t>(a.nz())};
}

void encode_header(const MrcHeader& h, std::byte* out) {
  std::memset(out, 0, kHeaderBytes);
  const std::int32_t ints1[] = {h.nx, h.ny, h.nz, h.mode, h.nxstart, h.nystart,
                                h.nzstart, h.mx, h.my, h.mz};
  for (std::size_t i = 0; i < 10; ++i) store(out, 4 * i, ints1[i]);
  for (std::size_t i = 0; i < 3; ++i) store(out, 40 + 4 * i, h.cella[i]);
  for (std::size_t i = 0; i < 3; ++i) store(out, 52 + 4 * i, h.cellb[i]);
  store(out, 64, h.mapc);
  store(out, 68, h.mapr);
  store(out, 72, h.maps);
  store(out, 76, h.dmin);
  store(out, 80, h.dmax);
  store(out, 84, h.dmean);
  store(out, 88, h.ispg);
  store(out, 92, h.nsymbt);
  std::memcpy(out + 96, h.extra.data(), h.extra.size());
  for (std::size_t i = 0; i < 3; ++i) store(out, 196 + 4 * i, h.origin[i]);
  std::memcpy(out + kMapOffset, "MAP ", 4);
  std::memcpy(out + kStampOffset, h.machine_stamp.data(), 4);
  store(out, 216, h.rms);
  store(out, 220, h.nlabl);
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    const auto& label = h.labels[i];
    std::memset(out + 224 + kLabelBytes * i, ' ', kLabelBytes);
    std::memcpy(out + 224 + kLabelBytes * i, label.data(), std::min(label.size(), kLabelBytes));
    if (label.empty() && i >= static_cast<std::size_t>(h.nlabl))
      std::memset(out + 224 + kLabelBytes * i, 0, kLabelBytes);
  }
}

std::vector<std::byte> encode(MrcHeader header, std::span<const std::byte> extended,
                              const ImageArray& source) {
  const ImageArray data = promote_half(source);
  const auto mode = mode_for_dtype(data.dtype());
  if (!mode)
    raise(ErrorCode::UnsupportedDtype,
          "no MRC mode stores " + std::string(to_string(data.dtype())));
  if (data.empty()) raise(ErrorCode::InvalidArgument, "cannot write an empty MRC array");
  const auto dims = dims_of(data);
  header.nx = dims[0];
  header.ny = dims[1];
  header.nz = dims[2];
  header.mode = static_cast<std::int32_t>(*mode);
  header.nsymbt = static_cast<std::int32_t>(extended.size());
  const Statistics stats = compute_statistics(data);
  header.dmin = static_cast<float>(stats.min);
  header.dmax = static_cast<float>(stats.max);
  header.dmean = static_cast<float>(stats.mean);
  header.rms = static_cast<float>(stats.rms);
  header.machine_stamp = {0x44, 0x44, 0x00, 0x00};

  std::vector<std::byte> out(kHeaderBytes + extended.size() + data.bytes().size());
  encode_header(header, out.data());
  std::memcpy(out.data() + kHeaderBytes, extended.data(), extended.size());
  std::memcpy(out.data() + kHeaderBytes + extended.size(), data.bytes().data(),
              data.bytes().size());
  return out;
}

}  // namespace

bool is_supported_mode(std::int32_t mode) {
  return mode == 0 || mode == 1 || mode == 2 || mode == 6 || mode == 12;
}

DType dtype_for_mode(Mode mode) {
  switch (mode) {
    case Mode::Int8: return DType::Int8;
    case Mode::Int16: return DType::Int16;
    case Mode::Float32: return DType::Float32;
    case Mode::UInt16: return DType::UInt16;
    case Mode::Float16: return DType::Float16;
  }
  raise(ErrorCode::UnsupportedMode, "unsupported MRC mode");
}

std::string MrcHeader::exttyp() const {
  std::string s(reinterpret_cast<const char*>(extra.data()) + 8, 4);
  return s.substr(0, s.find('\0'));
}

std::int32_t MrcHeader::nversion() const { return load<std::int32_t>(extra.data(), 12); }

std::optional<VoxelSize> MrcHeader::voxel_size() const {
  if (mx <= 0 || my <= 0 || mz <= 0) return std::nullopt;
  return VoxelSize{static_cast<double>(cella[0]) / mx, static_cast<double>(cella[1]) / my,
                   static_cast<double>(cella[2]) / mz};
}

MrcHeader read_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderBytes)
    raise(ErrorCode::TruncatedData, "MRC header needs 1024 bytes, got " +
                                        std::to_string(bytes.size()));
  if (std::memcmp(bytes.data() + kMapOffset, "MAP", 3) != 0)
    raise(ErrorCode::BadMagic, "missing 'MAP ' identifier at byte 208");

  std::array<std::byte, kHeaderBytes> raw;
  std::memcpy(raw.data(), bytes.data(), kHeaderBytes);
  const bool big = detect_big_endian(raw.data());
  if (big) {
    // Every numeric word except EXTTYP (word 27) and the MAP/MACHST words.
    kernels::byteswap32(std::span(raw.data(), 104));
    kernels::byteswap32(std::span(raw.data() + 108, kMapOffset - 108));
    kernels::byteswap32(std::span(raw.data() + 216, 8));
  }
  const std::byte* h = raw.data();

  MrcHeader header;
  header.nx = load<std::int32_t>(h, 0);
  header.ny = load<std::int32_t>(h, 4);
  header.nz = load<std::int32_t>(h, 8);
  header.mode = load<std::int32_t>(h, 12);
  header.nxstart = load<std::int32_t>(h, 16);
  header.nystart = load<std::int32_t>(h, 20);
  header.nzstart = load<std::int32_t>(h, 24);
  header.mx = load<std::int32_t>(h, 28);
  header.my = load<std::int32_t>(h, 32);
  header.mz = load<std::int32_t>(h, 36);
  for (std::size_t i = 0; i < 3; ++i) header.cella[i] = load<float>(h, 40 + 4 * i);
  for (std::size_t i = 0; i < 3; ++i) header.cellb[i] = load<float>(h, 52 + 4 * i);
  header.mapc = load<std::int32_t>(h, 64);
  header.mapr = load<std::int32_t>(h, 68);
  header.maps = load<std::int32_t>(h, 72);
  header.dmin = load<float>(h, 76);
  header.dmax = load<float>(h, 80);
  header.dmean = load<float>(h, 84);
  header.ispg = load<std::int32_t>(h, 88);
  header.nsymbt = load<std::int32_t>(h, 92);
  std::memcpy(header.extra.data(), h + 96, header.extra.size());
  for (std::size_t i = 0; i < 3; ++i) header.origin[i] = load<float>(h, 196 + 4 * i);
  for (std::size_t i = 0; i < 4; ++i)
    header.machine_stamp[i] = std::to_integer<std::uint8_t>(h[kStampOffset + i]);
  header.rms = load<float>(h, 216);
  header.nlabl = load<std::int32_t>(h, 220);
  for (std::size_t i = 0; i < kLabelCount; ++i)
    header.labels[i] = trim_label(h + 224 + kLabelBytes * i);
  return header;
}

MrcFile read_mrc(std::span<const std::byte> bytes) {
  MrcFile file;
  file.header = read_header(bytes);
  const MrcHeader& h = file.header;
  if (!is_supported_mode(h.mode))
    raise(ErrorCode::UnsupportedMode, "MRC mode " + std::to_string(h.mode) + " is not supported");
  if (h.nx <= 0 || h.ny <= 0 || h.nz <= 0)
    raise(ErrorCode::DecodeError, "MRC dimensions must be positive, got " +
                                      std::to_string(h.nx) + "x" + std::to_string(h.ny) + "x" +
                                      std::to_string(h.nz));
  if (h.nsymbt < 0)
    raise(ErrorCode::DecodeError, "negative extended header size " + std::to_string(h.nsymbt));

  const DType dtype = dtype_for_mode(static_cast<Mode>(h.mode));
  const std::size_t count = static_cast<std::size_t>(h.nx) * static_cast<std::size_t>(h.ny) *
                            static_cast<std::size_t>(h.nz);
  const std::size_t data_bytes = count * dtype_size(dtype);
  const std::size_t ext = static_cast<std::size_t>(h.nsymbt);
  if (bytes.size() < kHeaderBytes + ext + data_bytes)
    raise(ErrorCode::TruncatedData,
          "MRC declares " + std::to_string(kHeaderBytes + ext + data_bytes) +
              " bytes but payload has " + std::to_string(bytes.size()));

  file.extended_header.assign(bytes.begin() + kHeaderBytes, bytes.begin() + kHeaderBytes + ext);
  std::vector<std::byte> raw(bytes.begin() + kHeaderBytes + ext,
                             bytes.begin() + kHeaderBytes + ext + data_bytes);
  if (detect_big_endian(bytes.data())) {
    if (dtype_size(dtype) == 2) kernels::byteswap16(raw);
    if (dtype_size(dtype) == 4) kernels::byteswap32(raw);
  }
  file.data = ImageArray({static_cast<std::size_t>(h.nz), static_cast<std::size_t>(h.ny),
                          static_cast<std::size_t>(h.nx)},
                         dtype, std::move(raw));
  file.data.voxel_size = h.voxel_size();
  return file;
}

Statistics compute_statistics(const ImageArray& data) {
  const std::vector<double> v = data.to_double();
  if (v.empty()) return {};
  const auto mm = kernels::minmax(v);
  const double n = static_cast<double>(v.size());
  const double mean = kernels::sum(v) / n;
  const double rms = std::sqrt(kernels::sum_sq_dev(v, mean) / n);
  return {mm.min, mm.max, mean, rms};
}

std::vector<std::byte> write_mrc(const ImageArray& data, std::optional<VoxelSize> voxel_size) {
  MrcHeader header;
  const auto dims = dims_of(data);
  header.mx = dims[0];
  header.my = dims[1];
  header.mz = dims[2];
  const VoxelSize voxel = voxel_size.value_or(data.voxel_size.value_or(VoxelSize{1.0, 1.0, 1.0}));
  for (std::size_t i = 0; i < 3; ++i)
    header.cella[i] = static_cast<float>(voxel[i] * static_cast<double>(dims[i]));
  header.ispg = dims[2] > 1 ? 1 : 0;
  const std::int32_t version = 20140;
  std::memcpy(header.extra.data() + 12, &version, sizeof version);
  header.nlabl = 1;
  header.labels[0] = "cryocurate";
  return encode(header, {}, data);
}

std::vector<std::byte> write_mrc(const MrcFile& file) {
  return encode(file.header, file.extended_header, file.data);
}

}  // namespace cryocurate::mrc
