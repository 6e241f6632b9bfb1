#include <atomic>

#include "kernels_impl.hpp"

namespace bvlab::kernels {

namespace {

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{detect_backend()};
    return backend;
}

} // namespace

std::string_view backend_name(Backend b) noexcept {
    switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
    }
    return "unknown";
}

bool backend_available(Backend b) noexcept {
    switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2:
#if defined(BVLAB_HAVE_AVX2)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    case Backend::neon:
#if defined(BVLAB_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Backend detect_backend() noexcept {
    if (backend_available(Backend::avx2)) return Backend::avx2;
    if (backend_available(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

bool set_backend(Backend b) noexcept {
    if (!backend_available(b)) return false;
    current().store(b, std::memory_order_relaxed);
    return true;
}

const KernelTable& table(Backend b) noexcept {
    switch (b) {
#if defined(BVLAB_HAVE_AVX2)
    case Backend::avx2: return detail::avx2_table();
#endif
#if defined(BVLAB_HAVE_NEON)
    case Backend::neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
    }
}

const KernelTable& active() noexcept { return table(active_backend()); }

} // namespace bvlab::kernels
