#include <cstring>

#include "variants.hpp"

namespace cryocurate::kernels::detail {
namespace {

MinMax minmax_scalar(std::span<const double> v) {
  MinMax r{v[0], v[0]};
  for (double x : v) {
    r.min = x < r.min ? x : r.min;
    r.max = x > r.max ? x : r.max;
  }
  return r;
}

// Partial sums are assigned round-robin by index modulo 4; the vector
// variants reproduce exactly this grouping.
double sum_scalar(std::span<const double> v) {
  double p[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) p[i % 4] += v[i];
  return combine_partials(p);
}

double sum_sq_dev_scalar(std::span<const double> v, double center) {
  double p[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - center;
    p[i % 4] += d * d;
  }
  return combine_partials(p);
}

void affine_scalar(std::span<const double> in, double offset, double scale,
                   std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = (in[i] - offset) * scale;
}

void correlate_scalar(std::span<const double> padded,
                      std::span<const double> weights, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k)
      acc += weights[k] * padded[i + k];
    out[i] = acc;
  }
}

void axpy_scalar(std::span<double> acc, std::span<const double> src, double w) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * src[i];
}

void narrow_scalar(std::span<const double> in, std::span<float> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<float>(in[i]);
}

void widen_scalar(std::span<const float> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]);
}

void byteswap16_scalar(std::span<std::byte> data) {
  for (std::size_t i = 0; i + 1 < data.size(); i += 2) std::swap(data[i], data[i + 1]);
}

void byteswap32_scalar(std::span<std::byte> data) {
  for (std::size_t i = 0; i + 3 < data.size(); i += 4) {
    std::swap(data[i], data[i + 3]);
    std::swap(data[i + 1], data[i + 2]);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::Scalar,      minmax_scalar,   sum_scalar,    sum_sq_dev_scalar,
      affine_scalar,    correlate_scalar, axpy_scalar,  narrow_scalar,
      widen_scalar,     byteswap16_scalar, byteswap32_scalar};
  return table;
}

}  // namespace cryocurate::kernels::detail
