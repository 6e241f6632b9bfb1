// AVX2 kernels (compiled with -mavx2 only; no FMA so results match scalar).

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace bvlab::kernels::detail {

namespace {

inline __m256d madd(__m256d acc, __m256d a, __m256d b) { return _mm256_add_pd(acc, _mm256_mul_pd(a, b)); }

// C(m x n) += A B where A(i, p) lives at a[i * rs + p * cs]. Blocks of 4 rows
// x 8 columns stay in registers across the whole p loop; every element still
// accumulates p = 0, 1, ... in order, as in the scalar reference.
inline __m256i tail_mask(std::size_t lanes) {
    const __m256i idx = _mm256_set_epi64x(3, 2, 1, 0);
    return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(lanes)), idx);
}

template <std::size_t Rows>
inline void block_rows(std::size_t k, std::size_t n, const double* a, std::size_t rs, std::size_t cs,
                       const double* b, double* c, std::size_t i) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d lo[Rows], hi[Rows];
        for (std::size_t r = 0; r < Rows; ++r) {
            lo[r] = _mm256_loadu_pd(c + (i + r) * n + j);
            hi[r] = _mm256_loadu_pd(c + (i + r) * n + j + 4);
        }
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
            const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
            for (std::size_t r = 0; r < Rows; ++r) {
                const __m256d av = _mm256_broadcast_sd(a + (i + r) * rs + p * cs);
                lo[r] = madd(lo[r], av, b0);
                hi[r] = madd(hi[r], av, b1);
            }
        }
        for (std::size_t r = 0; r < Rows; ++r) {
            _mm256_storeu_pd(c + (i + r) * n + j, lo[r]);
            _mm256_storeu_pd(c + (i + r) * n + j + 4, hi[r]);
        }
    }
    while (j < n) {
        const std::size_t lanes = n - j < 4 ? n - j : 4;
        const __m256i mask = tail_mask(lanes);
        __m256d acc[Rows];
        for (std::size_t r = 0; r < Rows; ++r) acc[r] = _mm256_maskload_pd(c + (i + r) * n + j, mask);
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d bv = _mm256_maskload_pd(b + p * n + j, mask);
            for (std::size_t r = 0; r < Rows; ++r)
                acc[r] = madd(acc[r], _mm256_broadcast_sd(a + (i + r) * rs + p * cs), bv);
        }
        for (std::size_t r = 0; r < Rows; ++r) _mm256_maskstore_pd(c + (i + r) * n + j, mask, acc[r]);
        j += lanes;
    }
}

void gemm_strided(std::size_t m, std::size_t k, std::size_t n, const double* a, std::size_t rs, std::size_t cs,
                  const double* b, double* c) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) block_rows<4>(k, n, a, rs, cs, b, c, i);
    for (; i < m; ++i) block_rows<1>(k, n, a, rs, cs, b, c, i);
}

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    gemm_strided(m, k, n, a, k, 1, b, c);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    gemm_strided(m, k, n, a, 1, m, b, c);
}

void add_row(std::size_t m, std::size_t n, const double* v, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4)
            _mm256_storeu_pd(ci + j, _mm256_add_pd(_mm256_loadu_pd(ci + j), _mm256_loadu_pd(v + j)));
        for (; j < n; ++j) ci[j] = ci[j] + v[j];
    }
}

void col_sum(std::size_t m, std::size_t n, const double* a, double* out) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d acc = _mm256_loadu_pd(out + j);
        for (std::size_t i = 0; i < m; ++i) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i * n + j));
        _mm256_storeu_pd(out + j, acc);
    }
    for (; j < n; ++j) {
        double acc = out[j];
        for (std::size_t i = 0; i < m; ++i) acc = acc + a[i * n + j];
        out[j] = acc;
    }
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, madd(_mm256_loadu_pd(y + i), av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adam(std::size_t n, const AdamCoefficients& c, const double* grad, double* m, double* v, double* param) {
    const double one_minus_b1 = 1.0 - c.beta1;
    const double one_minus_b2 = 1.0 - c.beta2;
    const __m256d b1 = _mm256_set1_pd(c.beta1);
    const __m256d b2 = _mm256_set1_pd(c.beta2);
    const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
    const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
    const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
    const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
    const __m256d lr = _mm256_set1_pd(c.lr);
    const __m256d eps = _mm256_set1_pd(c.eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
        const __m256d vv =
            _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d m_hat = _mm256_div_pd(mv, bc1);
        const __m256d v_hat = _mm256_div_pd(vv, bc2);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
    }
    if (i < n) scalar_table().adam(n - i, c, grad + i, m + i, v + i, param + i);
}

constexpr KernelTable kTable{gemm_nn, gemm_tn, add_row, col_sum, mul, axpy, adam};

} // namespace

const KernelTable& avx2_table() noexcept { return kTable; }

} // namespace bvlab::kernels::detail
