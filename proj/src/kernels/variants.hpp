#pragma once

#include "cryocurate/kernels.hpp"

namespace cryocurate::kernels::detail {

const KernelTable& scalar_table();
// Null when the variant was not compiled into this build.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Final combination shared by all reduction variants.
inline double combine_partials(const double p[4]) {
  return (p[0] + p[1]) + (p[2] + p[3]);
}

}  // namespace cryocurate::kernels::detail
