#include <atomic>
#include <cstdlib>
#include <string>

#include "cryocurate/error.hpp"
#include "variants.hpp"

namespace cryocurate::kernels {
namespace {

const KernelTable* lookup(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return &detail::scalar_table();
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      if (!__builtin_cpu_supports("avx2")) return nullptr;
#endif
      return detail::avx2_table();
    case Isa::Neon: return detail::neon_table();
  }
  return nullptr;
}

Isa best_available() {
  if (lookup(Isa::Avx2) != nullptr) return Isa::Avx2;
  if (lookup(Isa::Neon) != nullptr) return Isa::Neon;
  return Isa::Scalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table_for(detected_isa())};
  return slot;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) { return lookup(isa) != nullptr; }

Isa detected_isa() {
  if (const char* env = std::getenv("CRYOCURATE_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
      if (want == to_string(isa) && supported(isa)) return isa;
  }
  return best_available();
}

const KernelTable& table_for(Isa isa) {
  const KernelTable* t = lookup(isa);
  if (t == nullptr)
    raise(ErrorCode::InvalidArgument,
          "SIMD variant '" + std::string(to_string(isa)) + "' is not available on this machine");
  return *t;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_active(Isa isa) { active_slot().store(&table_for(isa), std::memory_order_release); }

MinMax minmax(std::span<const double> v) {
  if (v.empty()) raise(ErrorCode::InvalidArgument, "minmax of an empty range");
  return active().minmax(v);
}
double sum(std::span<const double> v) { return active().sum(v); }
double sum_sq_dev(std::span<const double> v, double center) {
  return active().sum_sq_dev(v, center);
}
void affine(std::span<const double> in, double offset, double scale, std::span<double> out) {
  active().affine(in, offset, scale, out);
}
void correlate(std::span<const double> padded, std::span<const double> weights,
               std::span<double> out) {
  if (weights.empty() || padded.size() != out.size() + weights.size() - 1)
    raise(ErrorCode::InvalidArgument, "correlate: padded length must be out + taps - 1");
  active().correlate(padded, weights, out);
}
void axpy(std::span<double> acc, std::span<const double> src, double w) {
  active().axpy(acc, src, w);
}
void narrow(std::span<const double> in, std::span<float> out) { active().narrow(in, out); }
void widen(std::span<const float> in, std::span<double> out) { active().widen(in, out); }
void byteswap16(std::span<std::byte> data) { active().byteswap16(data); }
void byteswap32(std::span<std::byte> data) { active().byteswap32(data); }

}  // namespace cryocurate::kernels
