#pragma once

// Data-parallel inner loops shared by the image transforms, MRC statistics
// and endian conversion. Every kernel has a scalar reference implementation
// and, where the target supports it, an AVX2 (x86-64) or NEON (aarch64)
// variant. The variant is chosen once at startup from CPUID and can be
// pinned with CRYOCURATE_SIMD=scalar|avx2|neon.
//
// Element-wise kernels and `correlate`/`axpy` are bit-identical across
// variants: lanes map to independent outputs and each output accumulates
// its terms in the same order. Reductions (`sum`, `sum_sq_dev`) use four
// interleaved partial sums in every variant, so they agree exactly as well.
// Results for inputs containing NaN are unspecified.

#include <cstddef>
#include <span>
#include <string_view>

namespace cryocurate::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct MinMax {
  double min;
  double max;
};

struct KernelTable {
  Isa isa;
  MinMax (*minmax)(std::span<const double>);
  double (*sum)(std::span<const double>);
  double (*sum_sq_dev)(std::span<const double>, double center);
  void (*affine)(std::span<const double> in, double offset, double scale,
                 std::span<double> out);
  void (*correlate)(std::span<const double> padded,
                    std::span<const double> weights, std::span<double> out);
  void (*axpy)(std::span<double> acc, std::span<const double> src, double w);
  void (*narrow)(std::span<const double> in, std::span<float> out);
  void (*widen)(std::span<const float> in, std::span<double> out);
  void (*byteswap16)(std::span<std::byte> data);
  void (*byteswap32)(std::span<std::byte> data);
};

/// True when the running CPU (and this build) can execute `isa`.
bool supported(Isa isa);

/// Best variant for this machine, honoring CRYOCURATE_SIMD.
Isa detected_isa();

/// Table for a specific variant; throws Error(InvalidArgument) if the
/// variant is not supported here.
const KernelTable& table_for(Isa isa);

/// Table used by the free functions below.
const KernelTable& active();

/// Override the active variant (tests and benchmarking).
void set_active(Isa isa);

// Convenience wrappers over active().

/// Requires a non-empty input.
MinMax minmax(std::span<const double> v);
double sum(std::span<const double> v);
/// Sum of (v[i] - center)^2.
double sum_sq_dev(std::span<const double> v, double center);
/// out[i] = (in[i] - offset) * scale. `out` may alias `in`.
void affine(std::span<const double> in, double offset, double scale,
            std::span<double> out);
/// out[i] = sum_k weights[k] * padded[i + k], k ascending.
/// padded.size() must equal out.size() + weights.size() - 1.
void correlate(std::span<const double> padded, std::span<const double> weights,
               std::span<double> out);
/// acc[i] += w * src[i].
void axpy(std::span<double> acc, std::span<const double> src, double w);
void narrow(std::span<const double> in, std::span<float> out);
void widen(std::span<const float> in, std::span<double> out);
void byteswap16(std::span<std::byte> data);
void byteswap32(std::span<std::byte> data);

}  // namespace cryocurate::kernels
