#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kmeq/dense_matrix.hpp"

namespace kmeq {

enum class Family { gaussian, smatrix, bspline };

const char* family_name(Family f);

struct Provenance {
    Family family = Family::gaussian;
    std::string parameters;
    std::uint64_t seed = 0;
};

// One consistent instance of A X B = F with A m x n, B p x q, F m x q.
// x_star, when present, is a known solution used as the RSE reference.
struct ProblemInstance {
    DenseMatrix a;
    DenseMatrix b;
    DenseMatrix f;
    std::optional<DenseMatrix> x_star;
    Provenance provenance;
};

// A = randn(m, n), B = randn(p, q), x_star = ones(n, p), F = A x_star B.
// The thin-A / fat-B regime (m >= n, q >= p) is conventional, not required;
// violations warn on stderr instead of failing.
ProblemInstance gen_gaussian(std::size_t m, std::size_t n, std::size_t p,
                             std::size_t q, std::uint64_t seed);

// U Sigma V^T with U (x1 x r), V (x2 x r) orthonormalized Gaussian columns;
// Sigma has r-2 entries uniform in [sigma2, sigma1] and the last two pinned
// to sigma2 and sigma1, so the condition number is exactly sigma1/sigma2.
DenseMatrix gen_smatrix(std::size_t x1, std::size_t x2, std::size_t r,
                        double sigma1, double sigma2, std::uint64_t seed);

ProblemInstance make_consistent_instance(DenseMatrix a, DenseMatrix b,
                                         std::optional<DenseMatrix> x_star = std::nullopt);

enum class Surface { surface1, surface2 };

struct SurfaceSample {
    DenseMatrix xs, ys, zs;  // m x q grids
    double s_min = 0.0, s_max = 0.0;
    double t_min = 0.0, t_max = 0.0;
};

// surface1: x=s, y=t, z = s^3 - 3 s t^2 on [0, 2pi] x [1/2, 1]
// surface2: z = (s - s^3 - t^5) exp(-s^2 - t^2) on [-1, 1]^2
SurfaceSample surface_samples(Surface which, std::size_t m, std::size_t q);

// Cubic B-spline least-squares fitting setup: collocation matrices A (m x n)
// and B = (q x p collocation)^T, F = z grid, x_star = pinv(A) F pinv(B).
ProblemInstance build_fitting_problem(Surface which, std::size_t m, std::size_t q,
                                      std::size_t n, std::size_t p);

}  // namespace kmeq
