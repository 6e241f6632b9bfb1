// Reference kernels. Loop order fixes the per-element operation sequence that
// the SIMD backends reproduce.

#include <cmath>

#include "kernels_impl.hpp"

namespace bvlab::kernels::detail {

namespace {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] = ci[j] + aip * bp[j];
        }
    }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a + p * m;
        const double* bp = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = ap[i];
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] = ci[j] + api * bp[j];
        }
    }
}

void add_row(std::size_t m, std::size_t n, const double* v, double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] = c[i * n + j] + v[j];
}

void col_sum(std::size_t m, std::size_t n, const double* a, double* out) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] = out[j] + a[i * n + j];
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adam(std::size_t n, const AdamCoefficients& c, const double* grad, double* m, double* v, double* param) {
    const double one_minus_b1 = 1.0 - c.beta1;
    const double one_minus_b2 = 1.0 - c.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m[i] = c.beta1 * m[i] + one_minus_b1 * g;
        v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
        const double m_hat = m[i] / c.bias_correction1;
        const double v_hat = v[i] / c.bias_correction2;
        param[i] = param[i] - (c.lr * m_hat) / (std::sqrt(v_hat) + c.eps);
    }
}

constexpr KernelTable kTable{gemm_nn, gemm_tn, add_row, col_sum, mul, axpy, adam};

} // namespace

const KernelTable& scalar_table() noexcept { return kTable; }

} // namespace bvlab::kernels::detail
