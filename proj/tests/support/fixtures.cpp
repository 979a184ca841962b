#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace cryocurate::testing {

std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(CRYOCURATE_FIXTURES) / relative;
}

std::vector<std::byte> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::vector<std::byte> to_bytes(const std::string& s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

std::string to_string(const std::vector<std::byte>& b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

const nlohmann::json& expected() {
  static const nlohmann::json doc = nlohmann::json::parse(read_text(fixture_path("expected.json")));
  return doc;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = std::filesystem::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
           std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::permissions(path_, std::filesystem::perms::owner_all,
                               std::filesystem::perm_options::add, ec);
  std::filesystem::remove_all(path_, ec);
}

namespace {

template <class T>
void fill_integers(std::mt19937_64& rng, ImageArray& a) {
  std::uniform_int_distribution<long long> dist(std::numeric_limits<T>::min(),
                                                std::numeric_limits<T>::max());
  for (auto& x : a.mutable_values<T>()) x = static_cast<T>(dist(rng));
}

}  // namespace

ImageArray random_array(std::mt19937_64& rng, DType dtype, std::size_t max_dim) {
  std::uniform_int_distribution<std::size_t> dim(1, max_dim);
  ImageArray a({dim(rng), dim(rng), dim(rng)}, dtype);
  switch (dtype) {
    case DType::Int8: fill_integers<std::int8_t>(rng, a); break;
    case DType::Int16: fill_integers<std::int16_t>(rng, a); break;
    case DType::UInt8: fill_integers<std::uint8_t>(rng, a); break;
    case DType::UInt16: fill_integers<std::uint16_t>(rng, a); break;
    case DType::Int32: fill_integers<std::int32_t>(rng, a); break;
    case DType::Int64: fill_integers<std::int64_t>(rng, a); break;
    case DType::Float64: {
      std::normal_distribution<double> dist(0.0, 1e6);
      for (auto& x : a.mutable_values<double>()) x = dist(rng);
      break;
    }
    case DType::Float32: {
      std::normal_distribution<float> dist(0.0f, 100.0f);
      for (auto& x : a.mutable_values<float>()) x = dist(rng);
      break;
    }
    default: throw std::invalid_argument("random_array: unsupported dtype");
  }
  return a;
}

OracleStats brute_force_stats(const ImageArray& a) {
  const auto v = a.to_double();
  long double lo = v[0], hi = v[0], sum = 0;
  for (double x : v) {
    lo = std::min<long double>(lo, x);
    hi = std::max<long double>(hi, x);
    sum += x;
  }
  const long double mean = sum / v.size();
  long double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {lo, hi, mean, std::sqrt(ss / v.size())};
}

std::vector<std::byte> mrc_to_big_endian(std::vector<std::byte> b, std::size_t element_size) {
  auto swap_range = [&](std::size_t begin, std::size_t end, std::size_t width) {
    for (std::size_t i = begin; i + width <= end; i += width)
      for (std::size_t k = 0; k < width / 2; ++k) std::swap(b[i + k], b[i + width - 1 - k]);
  };
  swap_range(0, 104, 4);    // words 1-26
  swap_range(108, 208, 4);  // NVERSION .. ORIGIN
  swap_range(216, 224, 4);  // RMS, NLABL
  b[212] = std::byte{0x11};
  b[213] = std::byte{0x11};
  std::int32_t nsymbt_be;
  std::memcpy(&nsymbt_be, b.data() + 92, 4);
  const auto ext = static_cast<std::size_t>(__builtin_bswap32(static_cast<std::uint32_t>(nsymbt_be)));
  if (element_size > 1) swap_range(1024 + ext, b.size(), element_size);
  return b;
}

}  // namespace cryocurate::testing
