// AVX2 variants. This translation unit is built without -mavx2; only the
// functions below carry the target attribute, so nothing else in the
// program can pick up AVX2 code through inline-function merging.

#include "variants.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define CRYOCURATE_HAVE_AVX2 1
#include <immintrin.h>
#else
#define CRYOCURATE_HAVE_AVX2 0
#endif

namespace cryocurate::kernels::detail {

#if CRYOCURATE_HAVE_AVX2

#define CC_AVX2 __attribute__((target("avx2")))

namespace {

CC_AVX2 MinMax minmax_avx2(std::span<const double> v) {
  const double* p = v.data();
  const std::size_t n = v.size();
  __m256d lo = _mm256_set1_pd(p[0]);
  __m256d hi = lo;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(p + i);
    lo = _mm256_min_pd(x, lo);
    hi = _mm256_max_pd(x, hi);
  }
  alignas(32) double l[4];
  alignas(32) double h[4];
  _mm256_store_pd(l, lo);
  _mm256_store_pd(h, hi);
  MinMax r{l[0], h[0]};
  for (int k = 1; k < 4; ++k) {
    r.min = l[k] < r.min ? l[k] : r.min;
    r.max = h[k] > r.max ? h[k] : r.max;
  }
  for (; i < n; ++i) {
    r.min = p[i] < r.min ? p[i] : r.min;
    r.max = p[i] > r.max ? p[i] : r.max;
  }
  return r;
}

CC_AVX2 double sum_avx2(std::span<const double> v) {
  const double* p = v.data();
  const std::size_t n = v.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(p + i));
  alignas(32) double part[4];
  _mm256_store_pd(part, acc);
  for (std::size_t k = 0; i < n; ++i, ++k) part[k] += p[i];
  return combine_partials(part);
}

CC_AVX2 double sum_sq_dev_avx2(std::span<const double> v, double center) {
  const double* p = v.data();
  const std::size_t n = v.size();
  const __m256d c = _mm256_set1_pd(center);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), c);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  alignas(32) double part[4];
  _mm256_store_pd(part, acc);
  for (std::size_t k = 0; i < n; ++i, ++k) {
    const double d = p[i] - center;
    part[k] += d * d;
  }
  return combine_partials(part);
}

CC_AVX2 void affine_avx2(std::span<const double> in, double offset,
                         double scale, std::span<double> out) {
  const double* src = in.data();
  double* dst = out.data();
  const std::size_t n = in.size();
  const __m256d o = _mm256_set1_pd(offset);
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(src + i), o), s));
  for (; i < n; ++i) dst[i] = (src[i] - offset) * scale;
}

CC_AVX2 void correlate_avx2(std::span<const double> padded,
                            std::span<const double> weights,
                            std::span<double> out) {
  const double* src = padded.data();
  const double* w = weights.data();
  const std::size_t taps = weights.size();
  double* dst = out.data();
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps; ++k)
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(w[k]), _mm256_loadu_pd(src + i + k)));
    _mm256_storeu_pd(dst + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += w[k] * src[i + k];
    dst[i] = acc;
  }
}

CC_AVX2 void axpy_avx2(std::span<double> acc, std::span<const double> src,
                       double w) {
  double* a = acc.data();
  const double* s = src.data();
  const std::size_t n = acc.size();
  const __m256d wv = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(a + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                          _mm256_mul_pd(wv, _mm256_loadu_pd(s + i))));
  for (; i < n; ++i) a[i] += w * s[i];
}

CC_AVX2 void narrow_avx2(std::span<const double> in, std::span<float> out) {
  const double* src = in.data();
  float* dst = out.data();
  const std::size_t n = in.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm_storeu_ps(dst + i, _mm256_cvtpd_ps(_mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] = static_cast<float>(src[i]);
}

CC_AVX2 void widen_avx2(std::span<const float> in, std::span<double> out) {
  const float* src = in.data();
  double* dst = out.data();
  const std::size_t n = in.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, _mm256_cvtps_pd(_mm_loadu_ps(src + i)));
  for (; i < n; ++i) dst[i] = static_cast<double>(src[i]);
}

CC_AVX2 void shuffle_bytes(std::span<std::byte> data, __m256i mask,
                           std::size_t width) {
  auto* p = reinterpret_cast<unsigned char*>(data.data());
  const std::size_t n = data.size() - data.size() % width;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(p + i), _mm256_shuffle_epi8(x, mask));
  }
  for (; i < n; i += width)
    for (std::size_t a = 0, b = width - 1; a < b; ++a, --b) std::swap(p[i + a], p[i + b]);
}

CC_AVX2 void byteswap16_avx2(std::span<std::byte> data) {
  const __m256i mask = _mm256_setr_epi8(1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 13, 12, 15, 14,
                                        1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 13, 12, 15, 14);
  shuffle_bytes(data, mask, 2);
}

CC_AVX2 void byteswap32_avx2(std::span<std::byte> data) {
  const __m256i mask = _mm256_setr_epi8(3, 2, 1, 0, 7, 6, 5, 4, 11, 10, 9, 8, 15, 14, 13, 12,
                                        3, 2, 1, 0, 7, 6, 5, 4, 11, 10, 9, 8, 15, 14, 13, 12);
  shuffle_bytes(data, mask, 4);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{
      Isa::Avx2,      minmax_avx2,    sum_avx2,        sum_sq_dev_avx2,
      affine_avx2,    correlate_avx2, axpy_avx2,       narrow_avx2,
      widen_avx2,     byteswap16_avx2, byteswap32_avx2};
  return &table;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace cryocurate::kernels::detail
