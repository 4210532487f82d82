#pragma once

#include <cstddef>

// Inner-loop kernels with runtime backend selection. Every kernel has a
// scalar reference implementation; on x86-64 there are AVX2+FMA and
// AVX-512F variants. The widest ISA the CPU supports wins at startup and
// can be overridden with KMEQ_KERNELS=scalar|avx2|avx512 or
// force_backend(). Backends accumulate in different orders, so results
// agree across backends only to rounding; within one backend they are
// bitwise reproducible.

namespace kmeq::kernels {

struct Ops {
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sum_sq)(const double* x, std::size_t n);
    // sum of (x[i] - y[i])^2
    double (*sq_diff_sum)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    void (*scale)(double a, double* x, std::size_t n);
    // plane rotation: (x, y) <- (c*x - s*y, s*x + c*y)
    void (*rot)(double* x, double* y, std::size_t n, double c, double s);
    // row-major C = alpha*A*B + beta*C with leading dimensions lda/ldb/ldc.
    // beta == 0 overwrites C without reading it.
    void (*gemm)(std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double beta, double* c, std::size_t ldc);
    const char* name;
};

enum class Backend { scalar, avx2, avx512 };

extern const Ops scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
extern const Ops avx2_ops;
extern const Ops avx512_ops;
#endif

bool backend_supported(Backend b);

// Active table. Selected once on first use; force_backend() overrides and
// throws std::invalid_argument if the CPU lacks the requested ISA.
const Ops& active();
Backend active_backend();
void force_backend(Backend b);

}  // namespace kmeq::kernels
