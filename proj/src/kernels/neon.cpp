// AArch64 NEON kernels (two doubles per register, no fused multiply-add).

#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace bvlab::kernels::detail {

namespace {

inline float64x2_t madd(float64x2_t acc, float64x2_t a, float64x2_t b) { return vaddq_f64(acc, vmulq_f64(a, b)); }

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            float64x2_t c0 = vld1q_f64(ci + j), c1 = vld1q_f64(ci + j + 2);
            float64x2_t c2 = vld1q_f64(ci + j + 4), c3 = vld1q_f64(ci + j + 6);
            for (std::size_t p = 0; p < k; ++p) {
                const float64x2_t av = vdupq_n_f64(ai[p]);
                const double* bp = b + p * n + j;
                c0 = madd(c0, av, vld1q_f64(bp));
                c1 = madd(c1, av, vld1q_f64(bp + 2));
                c2 = madd(c2, av, vld1q_f64(bp + 4));
                c3 = madd(c3, av, vld1q_f64(bp + 6));
            }
            vst1q_f64(ci + j, c0);
            vst1q_f64(ci + j + 2, c1);
            vst1q_f64(ci + j + 4, c2);
            vst1q_f64(ci + j + 6, c3);
        }
        for (; j < n; ++j) {
            double acc = ci[j];
            for (std::size_t p = 0; p < k; ++p) acc = acc + ai[p] * b[p * n + j];
            ci[j] = acc;
        }
    }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) {
            float64x2_t c0 = vld1q_f64(ci + j);
            for (std::size_t p = 0; p < k; ++p) c0 = madd(c0, vdupq_n_f64(a[p * m + i]), vld1q_f64(b + p * n + j));
            vst1q_f64(ci + j, c0);
        }
        for (; j < n; ++j) {
            double acc = ci[j];
            for (std::size_t p = 0; p < k; ++p) acc = acc + a[p * m + i] * b[p * n + j];
            ci[j] = acc;
        }
    }
}

void add_row(std::size_t m, std::size_t n, const double* v, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) vst1q_f64(ci + j, vaddq_f64(vld1q_f64(ci + j), vld1q_f64(v + j)));
        for (; j < n; ++j) ci[j] = ci[j] + v[j];
    }
}

void col_sum(std::size_t m, std::size_t n, const double* a, double* out) {
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        float64x2_t acc = vld1q_f64(out + j);
        for (std::size_t i = 0; i < m; ++i) acc = vaddq_f64(acc, vld1q_f64(a + i * n + j));
        vst1q_f64(out + j, acc);
    }
    for (; j < n; ++j) {
        double acc = out[j];
        for (std::size_t i = 0; i < m; ++i) acc = acc + a[i * n + j];
        out[j] = acc;
    }
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const float64x2_t av = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, madd(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adam(std::size_t n, const AdamCoefficients& c, const double* grad, double* m, double* v, double* param) {
    const float64x2_t b1 = vdupq_n_f64(c.beta1), b2 = vdupq_n_f64(c.beta2);
    const float64x2_t omb1 = vdupq_n_f64(1.0 - c.beta1), omb2 = vdupq_n_f64(1.0 - c.beta2);
    const float64x2_t bc1 = vdupq_n_f64(c.bias_correction1), bc2 = vdupq_n_f64(c.bias_correction2);
    const float64x2_t lr = vdupq_n_f64(c.lr), eps = vdupq_n_f64(c.eps);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t g = vld1q_f64(grad + i);
        const float64x2_t mv = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(omb1, g));
        const float64x2_t vv = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(omb2, vmulq_f64(g, g)));
        vst1q_f64(m + i, mv);
        vst1q_f64(v + i, vv);
        const float64x2_t step = vdivq_f64(vmulq_f64(lr, vdivq_f64(mv, bc1)), vaddq_f64(vsqrtq_f64(vdivq_f64(vv, bc2)), eps));
        vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), step));
    }
    if (i < n) scalar_table().adam(n - i, c, grad + i, m + i, v + i, param + i);
}

constexpr KernelTable kTable{gemm_nn, gemm_tn, add_row, col_sum, mul, axpy, adam};

} // namespace

const KernelTable& neon_table() noexcept { return kTable; }

} // namespace bvlab::kernels::detail
