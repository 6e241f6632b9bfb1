#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop kernels behind numkit and nn. Every backend performs the same
// sequence of IEEE operations per output element (no fused multiply-add, no
// reassociation), so all backends are bit-identical to the scalar reference.

namespace bvlab::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b) noexcept;

/// Backends compiled in and supported by the running CPU.
bool backend_available(Backend b) noexcept;

/// Backend currently used by the dispatching entry points below.
Backend active_backend() noexcept;

/// Select a backend; returns false (and changes nothing) if unavailable.
bool set_backend(Backend b) noexcept;

/// Best available backend, picked once at startup.
Backend detect_backend() noexcept;

struct AdamCoefficients {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double bias_correction1; // 1 - beta1^t
    double bias_correction2; // 1 - beta2^t
};

/// Function table for one backend. Matrices are row-major and dense.
struct KernelTable {
    // c(m x n) += a(m x k) * b(k x n), k ascending per element
    void (*gemm_nn)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c);
    // c(m x n) += a(k x m)^T * b(k x n), k ascending per element
    void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c);
    // c[i, :] += v for each of m rows
    void (*add_row)(std::size_t m, std::size_t n, const double* v, double* c);
    // out[j] += sum_i a[i, j], i ascending
    void (*col_sum)(std::size_t m, std::size_t n, const double* a, double* out);
    // out[i] = a[i] * b[i]
    void (*mul)(std::size_t n, const double* a, const double* b, double* out);
    // y[i] += alpha * x[i]
    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
    void (*adam)(std::size_t n, const AdamCoefficients& c, const double* grad, double* m, double* v, double* param);
};

const KernelTable& table(Backend b) noexcept;
const KernelTable& active() noexcept;

} // namespace bvlab::kernels
