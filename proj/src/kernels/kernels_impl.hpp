#pragma once

#include "bvlab/kernels.hpp"

namespace bvlab::kernels::detail {

const KernelTable& scalar_table() noexcept;
#if defined(BVLAB_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(BVLAB_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

} // namespace bvlab::kernels::detail
