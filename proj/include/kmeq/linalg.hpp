#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kmeq/dense_matrix.hpp"

namespace kmeq {

// Thin SVD: M (r x c) = left_vectors (r x k) * diag(singular_values) *
// right_vectors (c x k) transposed, k = min(r, c). Singular values are
// sorted nonincreasing; for rank-deficient inputs the columns paired with
// zero singular values are zero vectors.
struct SvdResult {
    DenseMatrix left_vectors;
    std::vector<double> singular_values;
    DenseMatrix right_vectors;
};

double frobenius_norm(const DenseMatrix& m);
double frobenius_inner(const DenseMatrix& m1, const DenseMatrix& m2);

// One-sided Jacobi; throws kmeq::numerical_error if sweeps fail to converge.
SvdResult svd(const DenseMatrix& m);

// default truncation threshold: max(rows, cols) * machine epsilon * sigma_max
double default_rank_tol(std::size_t rows, std::size_t cols, double sigma_max);

// Moore-Penrose pseudoinverse via SVD; singular values <= tol are treated
// as zero. tol < 0 selects the default rule above.
DenseMatrix pseudoinverse(const DenseMatrix& m, double tol = -1.0);

// (smallest nonzero singular value, largest singular value); throws
// std::domain_error for a zero matrix.
std::pair<double, double> extreme_singular_values(const DenseMatrix& m);

DenseMatrix take_rows(const DenseMatrix& m, std::span<const std::size_t> indices);
DenseMatrix take_cols(const DenseMatrix& m, std::span<const std::size_t> indices);

}  // namespace kmeq
