#include "kmeq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "kmeq/errors.hpp"
#include "kmeq/kernels.hpp"

namespace kmeq {

double frobenius_norm(const DenseMatrix& m) {
    return std::sqrt(kernels::active().sum_sq(m.data(), m.size()));
}

double frobenius_inner(const DenseMatrix& m1, const DenseMatrix& m2) {
    if (!m1.same_shape(m2))
        throw std::invalid_argument("frobenius_inner: shapes " +
                                    std::to_string(m1.rows()) + "x" + std::to_string(m1.cols()) +
                                    " and " + std::to_string(m2.rows()) + "x" +
                                    std::to_string(m2.cols()) + " differ");
    return kernels::active().dot(m1.data(), m2.data(), m1.size());
}

namespace {

// One-sided Jacobi sweep on the transposed layout: rows of g are columns
// of the working matrix, so every rotation touches two contiguous rows.
// vt accumulates the same rotations starting from the identity; its rows
// end up as the right singular vectors.
void jacobi_orthogonalize(DenseMatrix& g, DenseMatrix& vt) {
    const std::size_t n = g.rows();
    const std::size_t m = g.cols();
    const auto& ops = kernels::active();
    const double tol = 1e-15;
    const int max_sweeps = 60;
    // Columns more than 1e-20 below the largest one carry only rounding
    // residue from cancellations. Rotating them re-correlates the residue
    // every sweep, so rank-deficient inputs would never settle; freeze them
    // instead. Their singular values sit far under default_rank_tol, so
    // every consumer treats them as zero regardless of the frozen value.
    double max_sq = 0.0;
    for (std::size_t p = 0; p < n; ++p) max_sq = std::max(max_sq, ops.sum_sq(g.row(p), m));
    const double frozen_sq = max_sq * 1e-40;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* gp = g.row(p);
                double* gq = g.row(q);
                const double app = ops.sum_sq(gp, m);
                const double aqq = ops.sum_sq(gq, m);
                if (app <= frozen_sq || aqq <= frozen_sq) continue;
                const double apq = ops.dot(gp, gq, m);
                // separate square roots: app * aqq can underflow to zero
                if (apq == 0.0 || std::abs(apq) <= tol * (std::sqrt(app) * std::sqrt(aqq)))
                    continue;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t =
                    (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                ops.rot(gp, gq, m, c, s);
                ops.rot(vt.row(p), vt.row(q), n, c, s);
                rotated = true;
            }
        }
        if (!rotated) return;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double norm = std::sqrt(ops.sum_sq(g.row(p), m));
        lo = std::min(lo, norm);
        hi = std::max(hi, norm);
    }
    throw numerical_error("svd: Jacobi sweeps did not converge for a " +
                          std::to_string(m) + "x" + std::to_string(n) +
                          " input (condition estimate " +
                          std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) +
                          ")");
}

}  // namespace

SvdResult svd(const DenseMatrix& m_in) {
    if (m_in.empty()) throw std::invalid_argument("svd: empty matrix");
    const bool transposed = m_in.rows() < m_in.cols();
    // g is (working matrix)^T where the working matrix is tall
    DenseMatrix g = transposed ? m_in : transpose(m_in);
    const std::size_t k = g.rows();
    const std::size_t wrows = g.cols();
    DenseMatrix vt = DenseMatrix::identity(k);
    jacobi_orthogonalize(g, vt);

    std::vector<double> sigma(k);
    const auto& ops = kernels::active();
    for (std::size_t j = 0; j < k; ++j)
        sigma[j] = std::sqrt(ops.sum_sq(g.row(j), wrows));
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    DenseMatrix u(wrows, k);   // left vectors of the working matrix
    DenseMatrix v(k, k);       // right vectors of the working matrix
    std::vector<double> sorted(k);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = order[j];
        const double s = sigma[src];
        sorted[j] = s;
        if (s > 0.0) {
            const double inv = 1.0 / s;
            const double* grow = g.row(src);
            for (std::size_t i = 0; i < wrows; ++i) u(i, j) = grow[i] * inv;
        }
        const double* vrow = vt.row(src);
        for (std::size_t i = 0; i < k; ++i) v(i, j) = vrow[i];
    }

    SvdResult result;
    result.singular_values = std::move(sorted);
    if (transposed) {
        result.left_vectors = std::move(v);
        result.right_vectors = std::move(u);
    } else {
        result.left_vectors = std::move(u);
        result.right_vectors = std::move(v);
    }
    return result;
}

double default_rank_tol(std::size_t rows, std::size_t cols, double sigma_max) {
    return static_cast<double>(std::max(rows, cols)) *
           std::numeric_limits<double>::epsilon() * sigma_max;
}

DenseMatrix pseudoinverse(const DenseMatrix& m, double tol) {
    SvdResult r = svd(m);
    const double sigma_max = r.singular_values.empty() ? 0.0 : r.singular_values.front();
    if (tol < 0.0) tol = default_rank_tol(m.rows(), m.cols(), sigma_max);
    const std::size_t k = r.singular_values.size();
    // pinv = V diag(1/sigma, truncated) U^T
    DenseMatrix vs(m.cols(), k);
    for (std::size_t j = 0; j < k; ++j) {
        const double s = r.singular_values[j];
        const double inv = s > tol ? 1.0 / s : 0.0;
        for (std::size_t i = 0; i < m.cols(); ++i)
            vs(i, j) = r.right_vectors(i, j) * inv;
    }
    DenseMatrix ut = transpose(r.left_vectors);
    return multiply(vs, ut);
}

std::pair<double, double> extreme_singular_values(const DenseMatrix& m) {
    SvdResult r = svd(m);
    const double sigma_max = r.singular_values.front();
    const double tol = default_rank_tol(m.rows(), m.cols(), sigma_max);
    double smallest = 0.0;
    for (auto it = r.singular_values.rbegin(); it != r.singular_values.rend(); ++it) {
        if (*it > tol) {
            smallest = *it;
            break;
        }
    }
    if (smallest == 0.0)
        throw std::domain_error("extreme_singular_values: zero matrix has no nonzero singular value");
    return {smallest, sigma_max};
}

namespace {

void check_indices(std::span<const std::size_t> indices, std::size_t limit,
                   const char* what) {
    if (indices.empty())
        throw std::invalid_argument(std::string(what) + ": empty index block");
    for (std::size_t idx : indices)
        if (idx >= limit)
            throw std::out_of_range(std::string(what) + ": index " + std::to_string(idx) +
                                    " out of range [0, " + std::to_string(limit) + ")");
    std::vector<std::size_t> sorted(indices.begin(), indices.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument(std::string(what) + ": duplicate index in block");
}

}  // namespace

DenseMatrix take_rows(const DenseMatrix& m, std::span<const std::size_t> indices) {
    check_indices(indices, m.rows(), "take_rows");
    std::vector<double> data;
    data.reserve(indices.size() * m.cols());
    for (std::size_t idx : indices)
        data.insert(data.end(), m.row(idx), m.row(idx) + m.cols());
    return DenseMatrix::from_data(indices.size(), m.cols(), std::move(data));
}

DenseMatrix take_cols(const DenseMatrix& m, std::span<const std::size_t> indices) {
    check_indices(indices, m.cols(), "take_cols");
    DenseMatrix out(m.rows(), indices.size());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* src = m.row(i);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < indices.size(); ++j) dst[j] = src[indices[j]];
    }
    return out;
}

}  // namespace kmeq
