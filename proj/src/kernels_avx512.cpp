#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "kmeq/kernels.hpp"

namespace kmeq::kernels {
namespace {

double dot_avx512(const double* x, const double* y, std::size_t n) {
    __m512d a0 = _mm512_setzero_pd();
    __m512d a1 = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        a0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), a0);
        a1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), a1);
    }
    for (; i + 8 <= n; i += 8)
        a0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), a0);
    double acc = _mm512_reduce_add_pd(_mm512_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_sq_avx512(const double* x, std::size_t n) { return dot_avx512(x, x, n); }

double sq_diff_sum_avx512(const double* x, const double* y, std::size_t n) {
    __m512d a0 = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m512d d = _mm512_sub_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i));
        a0 = _mm512_fmadd_pd(d, d, a0);
    }
    double acc = _mm512_reduce_add_pd(a0);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

void axpy_avx512(double a, const double* x, double* y, std::size_t n) {
    const __m512d av = _mm512_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(y + i, _mm512_fmadd_pd(av, _mm512_loadu_pd(x + i),
                                                _mm512_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx512(double a, double* x, std::size_t n) {
    const __m512d av = _mm512_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(x + i, _mm512_mul_pd(av, _mm512_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void rot_avx512(double* x, double* y, std::size_t n, double c, double s) {
    const __m512d cv = _mm512_set1_pd(c);
    const __m512d sv = _mm512_set1_pd(s);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m512d xv = _mm512_loadu_pd(x + i);
        __m512d yv = _mm512_loadu_pd(y + i);
        _mm512_storeu_pd(x + i, _mm512_fmsub_pd(cv, xv, _mm512_mul_pd(sv, yv)));
        _mm512_storeu_pd(y + i, _mm512_fmadd_pd(sv, xv, _mm512_mul_pd(cv, yv)));
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

// Broadcast-and-FMA with the scaling folded into the instruction choice.
// MODE +1 and -1 avoid the scalar alpha*a[l] product: that multiply forces a
// register-source broadcast through port 5 where it collides with the FMAs,
// while a plain memory broadcast rides the load ports. fnmadd(a,b,c) and
// fmadd(-a,b,c) round identically, so all three modes give the same bits.
template <int MODE>
inline __m512d fma_mode(double alpha, const double* ap, __m512d b, __m512d c) {
    if constexpr (MODE == 1) return _mm512_fmadd_pd(_mm512_set1_pd(*ap), b, c);
    else if constexpr (MODE == -1) return _mm512_fnmadd_pd(_mm512_set1_pd(*ap), b, c);
    else return _mm512_fmadd_pd(_mm512_set1_pd(alpha * *ap), b, c);
}

// ROWS x 16 register-blocked microkernel; accumulates alpha*A*B into C.
// Eight rows keep 16 independent FMA chains in flight, enough to cover the
// FMA latency x throughput product; smaller ROWS mop up the leftovers.
template <int MODE, int ROWS>
void micro_rx16(std::size_t k, double alpha, const double* a, std::size_t lda,
                const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    __m512d acc[ROWS][2];
    for (int r = 0; r < ROWS; ++r) {
        acc[r][0] = _mm512_loadu_pd(c + r * ldc);
        acc[r][1] = _mm512_loadu_pd(c + r * ldc + 8);
    }
    for (std::size_t l = 0; l < k; ++l) {
        const __m512d b0 = _mm512_loadu_pd(b + l * ldb);
        const __m512d b1 = _mm512_loadu_pd(b + l * ldb + 8);
        for (int r = 0; r < ROWS; ++r) {
            acc[r][0] = fma_mode<MODE>(alpha, a + r * lda + l, b0, acc[r][0]);
            acc[r][1] = fma_mode<MODE>(alpha, a + r * lda + l, b1, acc[r][1]);
        }
    }
    for (int r = 0; r < ROWS; ++r) {
        _mm512_storeu_pd(c + r * ldc, acc[r][0]);
        _mm512_storeu_pd(c + r * ldc + 8, acc[r][1]);
    }
}

// ROWS x jn masked tail for the trailing jn = n mod 16 columns.
template <int MODE, int ROWS>
void micro_rxt(std::size_t k, double alpha, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc,
               std::size_t jn) {
    const __mmask8 m0 = jn >= 8 ? 0xFF : static_cast<__mmask8>((1u << jn) - 1);
    const __mmask8 m1 = jn > 8 ? static_cast<__mmask8>((1u << (jn - 8)) - 1) : 0;
    __m512d a0[ROWS], a1[ROWS];
    for (int r = 0; r < ROWS; ++r) {
        a0[r] = _mm512_maskz_loadu_pd(m0, c + r * ldc);
        a1[r] = m1 ? _mm512_maskz_loadu_pd(m1, c + r * ldc + 8) : _mm512_setzero_pd();
    }
    for (std::size_t l = 0; l < k; ++l) {
        const __m512d b0 = _mm512_maskz_loadu_pd(m0, b + l * ldb);
        for (int r = 0; r < ROWS; ++r)
            a0[r] = fma_mode<MODE>(alpha, a + r * lda + l, b0, a0[r]);
        if (m1) {
            const __m512d b1 = _mm512_maskz_loadu_pd(m1, b + l * ldb + 8);
            for (int r = 0; r < ROWS; ++r)
                a1[r] = fma_mode<MODE>(alpha, a + r * lda + l, b1, a1[r]);
        }
    }
    for (int r = 0; r < ROWS; ++r) {
        _mm512_mask_storeu_pd(c + r * ldc, m0, a0[r]);
        if (m1) _mm512_mask_storeu_pd(c + r * ldc + 8, m1, a1[r]);
    }
}

template <int MODE>
void gemm_avx512_body(std::size_t m, std::size_t n, std::size_t k, double alpha,
                      const double* a, std::size_t lda, const double* b,
                      std::size_t ldb, double beta, double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        if (beta == 0.0) {
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        } else if (beta != 1.0) {
            scale_avx512(beta, crow, n);
        }
    }
    std::size_t j0 = 0;
    for (; j0 + 16 <= n; j0 += 16) {
        std::size_t i0 = 0;
        for (; i0 + 8 <= m; i0 += 8)
            micro_rx16<MODE, 8>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                                c + i0 * ldc + j0, ldc);
        for (; i0 + 4 <= m; i0 += 4)
            micro_rx16<MODE, 4>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                                c + i0 * ldc + j0, ldc);
        for (; i0 < m; ++i0)
            micro_rx16<MODE, 1>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                                c + i0 * ldc + j0, ldc);
    }
    if (j0 < n) {
        const std::size_t jn = n - j0;
        std::size_t i0 = 0;
        for (; i0 + 8 <= m; i0 += 8)
            micro_rxt<MODE, 8>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                               c + i0 * ldc + j0, ldc, jn);
        for (; i0 + 4 <= m; i0 += 4)
            micro_rxt<MODE, 4>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                               c + i0 * ldc + j0, ldc, jn);
        for (; i0 < m; ++i0)
            micro_rxt<MODE, 1>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                               c + i0 * ldc + j0, ldc, jn);
    }
}

void gemm_avx512(std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double beta, double* c, std::size_t ldc) {
    if (alpha == 1.0)
        gemm_avx512_body<1>(m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    else if (alpha == -1.0)
        gemm_avx512_body<-1>(m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    else
        gemm_avx512_body<0>(m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace

const Ops avx512_ops = {dot_avx512,   sum_sq_avx512, sq_diff_sum_avx512,
                        axpy_avx512,  scale_avx512,  rot_avx512,
                        gemm_avx512,  "avx512"};

}  // namespace kmeq::kernels

#endif
