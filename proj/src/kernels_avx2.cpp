#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "kmeq/kernels.hpp"

namespace kmeq::kernels {
namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
        a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
        a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
    }
    for (; i + 4 <= n; i += 4)
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    double acc = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_sq_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

double sq_diff_sum_avx2(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        a1 = _mm256_fmadd_pd(d1, d1, a1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        a0 = _mm256_fmadd_pd(d0, d0, a0);
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4),
                                                    _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void rot_avx2(double* x, double* y, std::size_t n, double c, double s) {
    const __m256d cv = _mm256_set1_pd(c);
    const __m256d sv = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d yv = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(x + i, _mm256_fmsub_pd(cv, xv, _mm256_mul_pd(sv, yv)));
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(sv, xv, _mm256_mul_pd(cv, yv)));
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

// Broadcast-and-FMA with the scaling folded into the instruction choice;
// modes +1/-1 skip the scalar alpha*a[l] product so the broadcast stays a
// plain memory load. fnmadd rounds like fmadd of the negation, so all three
// modes give the same bits.
template <int MODE>
inline __m256d fma_mode(double alpha, const double* ap, __m256d b, __m256d c) {
    if constexpr (MODE == 1) return _mm256_fmadd_pd(_mm256_set1_pd(*ap), b, c);
    else if constexpr (MODE == -1) return _mm256_fnmadd_pd(_mm256_set1_pd(*ap), b, c);
    else return _mm256_fmadd_pd(_mm256_set1_pd(alpha * *ap), b, c);
}

// lane mask for the low w lanes of a 4-double vector
inline __m256i lane_mask(std::size_t w) {
    return _mm256_setr_epi64x(w > 0 ? -1 : 0, w > 1 ? -1 : 0, w > 2 ? -1 : 0,
                              w > 3 ? -1 : 0);
}

// ROWS x 8 register-blocked FMA microkernel; accumulates alpha*A*B into C.
template <int MODE, int ROWS>
void micro_rx8(std::size_t k, double alpha, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    __m256d acc[ROWS][2];
    for (int r = 0; r < ROWS; ++r) {
        acc[r][0] = _mm256_loadu_pd(c + r * ldc);
        acc[r][1] = _mm256_loadu_pd(c + r * ldc + 4);
    }
    for (std::size_t l = 0; l < k; ++l) {
        const __m256d b0 = _mm256_loadu_pd(b + l * ldb);
        const __m256d b1 = _mm256_loadu_pd(b + l * ldb + 4);
        for (int r = 0; r < ROWS; ++r) {
            acc[r][0] = fma_mode<MODE>(alpha, a + r * lda + l, b0, acc[r][0]);
            acc[r][1] = fma_mode<MODE>(alpha, a + r * lda + l, b1, acc[r][1]);
        }
    }
    for (int r = 0; r < ROWS; ++r) {
        _mm256_storeu_pd(c + r * ldc, acc[r][0]);
        _mm256_storeu_pd(c + r * ldc + 4, acc[r][1]);
    }
}

// ROWS x jn masked tail for the trailing jn = n mod 8 columns.
template <int MODE, int ROWS>
void micro_rxt(std::size_t k, double alpha, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc,
               std::size_t jn) {
    const __m256i m0 = lane_mask(jn >= 4 ? 4 : jn);
    const bool hi = jn > 4;
    const __m256i m1 = lane_mask(hi ? jn - 4 : 0);
    __m256d a0[ROWS], a1[ROWS];
    for (int r = 0; r < ROWS; ++r) {
        a0[r] = _mm256_maskload_pd(c + r * ldc, m0);
        a1[r] = hi ? _mm256_maskload_pd(c + r * ldc + 4, m1) : _mm256_setzero_pd();
    }
    for (std::size_t l = 0; l < k; ++l) {
        const __m256d b0 = _mm256_maskload_pd(b + l * ldb, m0);
        for (int r = 0; r < ROWS; ++r)
            a0[r] = fma_mode<MODE>(alpha, a + r * lda + l, b0, a0[r]);
        if (hi) {
            const __m256d b1 = _mm256_maskload_pd(b + l * ldb + 4, m1);
            for (int r = 0; r < ROWS; ++r)
                a1[r] = fma_mode<MODE>(alpha, a + r * lda + l, b1, a1[r]);
        }
    }
    for (int r = 0; r < ROWS; ++r) {
        _mm256_maskstore_pd(c + r * ldc, m0, a0[r]);
        if (hi) _mm256_maskstore_pd(c + r * ldc + 4, m1, a1[r]);
    }
}

template <int MODE>
void gemm_avx2_body(std::size_t m, std::size_t n, std::size_t k, double alpha,
                    const double* a, std::size_t lda, const double* b,
                    std::size_t ldb, double beta, double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        if (beta == 0.0) {
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        } else if (beta != 1.0) {
            scale_avx2(beta, crow, n);
        }
    }
    std::size_t j0 = 0;
    for (; j0 + 8 <= n; j0 += 8) {
        std::size_t i0 = 0;
        for (; i0 + 4 <= m; i0 += 4)
            micro_rx8<MODE, 4>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                               c + i0 * ldc + j0, ldc);
        for (; i0 < m; ++i0)
            micro_rx8<MODE, 1>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                               c + i0 * ldc + j0, ldc);
    }
    if (j0 < n) {
        const std::size_t jn = n - j0;
        std::size_t i0 = 0;
        for (; i0 + 4 <= m; i0 += 4)
            micro_rxt<MODE, 4>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                               c + i0 * ldc + j0, ldc, jn);
        for (; i0 < m; ++i0)
            micro_rxt<MODE, 1>(k, alpha, a + i0 * lda, lda, b + j0, ldb,
                               c + i0 * ldc + j0, ldc, jn);
    }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, double alpha,
               const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double beta, double* c, std::size_t ldc) {
    if (alpha == 1.0)
        gemm_avx2_body<1>(m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    else if (alpha == -1.0)
        gemm_avx2_body<-1>(m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    else
        gemm_avx2_body<0>(m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace

const Ops avx2_ops = {dot_avx2,   sum_sq_avx2, sq_diff_sum_avx2, axpy_avx2,
                      scale_avx2, rot_avx2,    gemm_avx2,        "avx2"};

}  // namespace kmeq::kernels

#endif
