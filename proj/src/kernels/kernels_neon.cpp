// NEON variants for aarch64, where Advanced SIMD is part of the baseline
// ISA and needs no runtime check.

#include "variants.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace cryocurate::kernels::detail {

#if defined(__aarch64__)

namespace {

MinMax minmax_neon(std::span<const double> v) {
  const double* p = v.data();
  const std::size_t n = v.size();
  float64x2_t lo = vdupq_n_f64(p[0]);
  float64x2_t hi = lo;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(p + i);
    lo = vminq_f64(x, lo);
    hi = vmaxq_f64(x, hi);
  }
  MinMax r{vgetq_lane_f64(lo, 0), vgetq_lane_f64(hi, 0)};
  const double l1 = vgetq_lane_f64(lo, 1);
  const double h1 = vgetq_lane_f64(hi, 1);
  r.min = l1 < r.min ? l1 : r.min;
  r.max = h1 > r.max ? h1 : r.max;
  for (; i < n; ++i) {
    r.min = p[i] < r.min ? p[i] : r.min;
    r.max = p[i] > r.max ? p[i] : r.max;
  }
  return r;
}

double sum_neon(std::span<const double> v) {
  const double* p = v.data();
  const std::size_t n = v.size();
  float64x2_t a01 = vdupq_n_f64(0.0);
  float64x2_t a23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a01 = vaddq_f64(a01, vld1q_f64(p + i));
    a23 = vaddq_f64(a23, vld1q_f64(p + i + 2));
  }
  double part[4];
  vst1q_f64(part, a01);
  vst1q_f64(part + 2, a23);
  for (std::size_t k = 0; i < n; ++i, ++k) part[k] += p[i];
  return combine_partials(part);
}

double sum_sq_dev_neon(std::span<const double> v, double center) {
  const double* p = v.data();
  const std::size_t n = v.size();
  const float64x2_t c = vdupq_n_f64(center);
  float64x2_t a01 = vdupq_n_f64(0.0);
  float64x2_t a23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(p + i), c);
    const float64x2_t d1 = vsubq_f64(vld1q_f64(p + i + 2), c);
    a01 = vaddq_f64(a01, vmulq_f64(d0, d0));
    a23 = vaddq_f64(a23, vmulq_f64(d1, d1));
  }
  double part[4];
  vst1q_f64(part, a01);
  vst1q_f64(part + 2, a23);
  for (std::size_t k = 0; i < n; ++i, ++k) {
    const double d = p[i] - center;
    part[k] += d * d;
  }
  return combine_partials(part);
}

void affine_neon(std::span<const double> in, double offset, double scale,
                 std::span<double> out) {
  const double* src = in.data();
  double* dst = out.data();
  const std::size_t n = in.size();
  const float64x2_t o = vdupq_n_f64(offset);
  const float64x2_t s = vdupq_n_f64(scale);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vmulq_f64(vsubq_f64(vld1q_f64(src + i), o), s));
  for (; i < n; ++i) dst[i] = (src[i] - offset) * scale;
}

void correlate_neon(std::span<const double> padded,
                    std::span<const double> weights, std::span<double> out) {
  const double* src = padded.data();
  const double* w = weights.data();
  const std::size_t taps = weights.size();
  double* dst = out.data();
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < taps; ++k)
      acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(w[k]), vld1q_f64(src + i + k)));
    vst1q_f64(dst + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += w[k] * src[i + k];
    dst[i] = acc;
  }
}

void axpy_neon(std::span<double> acc, std::span<const double> src, double w) {
  double* a = acc.data();
  const double* s = src.data();
  const std::size_t n = acc.size();
  const float64x2_t wv = vdupq_n_f64(w);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(a + i, vaddq_f64(vld1q_f64(a + i), vmulq_f64(wv, vld1q_f64(s + i))));
  for (; i < n; ++i) a[i] += w * s[i];
}

void narrow_neon(std::span<const double> in, std::span<float> out) {
  const double* src = in.data();
  float* dst = out.data();
  const std::size_t n = in.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1_f32(dst + i, vcvt_f32_f64(vld1q_f64(src + i)));
  for (; i < n; ++i) dst[i] = static_cast<float>(src[i]);
}

void widen_neon(std::span<const float> in, std::span<double> out) {
  const float* src = in.data();
  double* dst = out.data();
  const std::size_t n = in.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vcvt_f64_f32(vld1_f32(src + i)));
  for (; i < n; ++i) dst[i] = static_cast<double>(src[i]);
}

void byteswap16_neon(std::span<std::byte> data) {
  auto* p = reinterpret_cast<uint8_t*>(data.data());
  const std::size_t n = data.size() - data.size() % 2;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) vst1q_u8(p + i, vrev16q_u8(vld1q_u8(p + i)));
  for (; i < n; i += 2) std::swap(p[i], p[i + 1]);
}

void byteswap32_neon(std::span<std::byte> data) {
  auto* p = reinterpret_cast<uint8_t*>(data.data());
  const std::size_t n = data.size() - data.size() % 4;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) vst1q_u8(p + i, vrev32q_u8(vld1q_u8(p + i)));
  for (; i < n; i += 4) {
    std::swap(p[i], p[i + 3]);
    std::swap(p[i + 1], p[i + 2]);
  }
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{
      Isa::Neon,      minmax_neon,    sum_neon,        sum_sq_dev_neon,
      affine_neon,    correlate_neon, axpy_neon,       narrow_neon,
      widen_neon,     byteswap16_neon, byteswap32_neon};
  return &table;
}

#else

const KernelTable* neon_table() { return nullptr; }

#endif

}  // namespace cryocurate::kernels::detail
