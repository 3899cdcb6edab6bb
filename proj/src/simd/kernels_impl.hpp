#pragma once

#include "tmpnn/simd.hpp"

namespace tmpnn::simd::detail {

extern const KernelTable scalar_table;
#if defined(TMPNN_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(TMPNN_HAVE_NEON)
extern const KernelTable neon_table;
#endif

}  // namespace tmpnn::simd::detail
