#include "cryocurate/formats.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include "cryocurate/mrc.hpp"
#include "cryocurate/npy.hpp"

namespace cryocurate {
namespace {

bool ends_with_ci(std::string_view s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.begin(), suffix.end(), s.end() - static_cast<std::ptrdiff_t>(suffix.size()),
                    [](char a, char b) {
                      return std::tolower(static_cast<unsigned char>(a)) ==
                             std::tolower(static_cast<unsigned char>(b));
                    });
}

bool looks_like_star(std::span<const std::byte> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()),
                              std::min<std::size_t>(bytes.size(), 64 * 1024));
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else if (c == '#') {
      const auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) return false;
      pos = nl + 1;
    } else {
      return text.substr(pos, 5) == "data_";
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(FileFormat format) {
  switch (format) {
    case FileFormat::Mrc: return "MRC";
    case FileFormat::Npy: return "NPY";
    case FileFormat::Star: return "STAR";
    case FileFormat::Opaque: return "OPAQUE";
  }
  return "OPAQUE";
}

FileFormat detect_format(std::span<const std::byte> bytes, std::string_view filename_hint) {
  if (bytes.size() >= 6 && std::memcmp(bytes.data(), "\x93NUMPY", 6) == 0) return FileFormat::Npy;
  if (bytes.size() >= mrc::kHeaderBytes && std::memcmp(bytes.data() + 208, "MAP", 3) == 0)
    return FileFormat::Mrc;
  if (ends_with_ci(filename_hint, ".star") && looks_like_star(bytes)) return FileFormat::Star;
  return FileFormat::Opaque;
}

ImageArray decode_image(std::span<const std::byte> bytes, std::string_view name) {
  switch (detect_format(bytes, name)) {
    case FileFormat::Mrc: return mrc::read_mrc(bytes).data;
    case FileFormat::Npy: return npy::read_npy(bytes);
    default:
      raise(ErrorCode::DecodeError,
            "'" + std::string(name) + "' is not an MRC or NPY image (format " +
                std::string(to_string(detect_format(bytes, name))) + ")");
  }
}

}  // namespace cryocurate
