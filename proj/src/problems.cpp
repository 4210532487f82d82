#include "kmeq/problems.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "kmeq/bspline.hpp"
#include "kmeq/errors.hpp"
#include "kmeq/kernels.hpp"
#include "kmeq/linalg.hpp"
#include "kmeq/rng.hpp"

namespace kmeq {

const char* family_name(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::smatrix: return "smatrix";
        case Family::bspline: return "bspline";
    }
    return "unknown";
}

namespace {

void fill_gaussian(DenseMatrix& m, Rng& rng) {
    double* d = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) d[i] = rng.normal();
}

// Rows of `rows_out` become orthonormal (the transposed layout keeps every
// column of the eventual factor contiguous). Modified Gram-Schmidt with one
// reorthogonalization pass; degenerate draws are rejected and redrawn.
DenseMatrix orthonormal_columns_transposed(std::size_t cols, std::size_t rank, Rng& rng) {
    const auto& ops = kernels::active();
    DenseMatrix g(rank, cols);
    for (std::size_t j = 0; j < rank; ++j) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 64)
                throw numerical_error("orthonormalization failed to find an independent draw");
            double* v = g.row(j);
            for (std::size_t i = 0; i < cols; ++i) v[i] = rng.normal();
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t i = 0; i < j; ++i)
                    ops.axpy(-ops.dot(g.row(i), v, cols), g.row(i), v, cols);
            const double norm = std::sqrt(ops.sum_sq(v, cols));
            if (norm > 1e-8) {
                ops.scale(1.0 / norm, v, cols);
                break;
            }
        }
    }
    return g;
}

}  // namespace

ProblemInstance gen_gaussian(std::size_t m, std::size_t n, std::size_t p,
                             std::size_t q, std::uint64_t seed) {
    if (m < 1 || n < 1 || p < 1 || q < 1)
        throw std::invalid_argument("gen_gaussian: dimensions must be positive");
    if (m < n || q < p)
        std::cerr << "gen_gaussian: warning: outside the thin-A/fat-B regime (m >= n, q >= p)\n";
    Rng rng(mix_seed(seed, 0x6761757373ull));
    DenseMatrix a(m, n);
    fill_gaussian(a, rng);
    DenseMatrix b(p, q);
    fill_gaussian(b, rng);
    ProblemInstance inst = make_consistent_instance(std::move(a), std::move(b));
    inst.provenance.family = Family::gaussian;
    inst.provenance.parameters = "m=" + std::to_string(m) + " n=" + std::to_string(n) +
                                 " p=" + std::to_string(p) + " q=" + std::to_string(q);
    inst.provenance.seed = seed;
    return inst;
}

DenseMatrix gen_smatrix(std::size_t x1, std::size_t x2, std::size_t r,
                        double sigma1, double sigma2, std::uint64_t seed) {
    if (r < 2)
        throw std::invalid_argument("gen_smatrix: rank must be >= 2 (two pinned spectrum entries)");
    if (r > std::min(x1, x2))
        throw std::invalid_argument("gen_smatrix: rank exceeds min dimension");
    if (!(sigma2 > 0.0) || !(sigma1 >= sigma2))
        throw std::invalid_argument("gen_smatrix: need sigma1 >= sigma2 > 0");
    Rng rng(mix_seed(seed, 0x736d6174ull));
    DenseMatrix ut = orthonormal_columns_transposed(x1, r, rng);  // rows = columns of U
    DenseMatrix vt = orthonormal_columns_transposed(x2, r, rng);  // rows = columns of V
    std::vector<double> sigma(r);
    for (std::size_t i = 0; i + 2 < r; ++i)
        sigma[i] = sigma2 + (sigma1 - sigma2) * rng.uniform();
    sigma[r - 2] = sigma2;
    sigma[r - 1] = sigma1;
    // U Sigma V^T = (Sigma U^T)^T V^T
    for (std::size_t i = 0; i < r; ++i)
        kernels::active().scale(sigma[i], ut.row(i), x1);
    return multiply(transpose(ut), vt);
}

ProblemInstance make_consistent_instance(DenseMatrix a, DenseMatrix b,
                                         std::optional<DenseMatrix> x_star) {
    if (!x_star) x_star = DenseMatrix::filled(a.cols(), b.rows(), 1.0);
    if (x_star->rows() != a.cols() || x_star->cols() != b.rows())
        throw std::invalid_argument("make_consistent_instance: x_star must be cols(A) x rows(B)");
    // same association as the solvers' residual products, so the generated
    // instance is consistent to the last bit
    DenseMatrix f = multiply(a, multiply(*x_star, b));
    ProblemInstance inst;
    inst.a = std::move(a);
    inst.b = std::move(b);
    inst.f = std::move(f);
    inst.x_star = std::move(x_star);
    inst.provenance.parameters = "custom";
    return inst;
}

SurfaceSample surface_samples(Surface which, std::size_t m, std::size_t q) {
    if (m < 2 || q < 2)
        throw std::invalid_argument("surface_samples: need at least a 2x2 grid");
    SurfaceSample out;
    if (which == Surface::surface1) {
        out.s_min = 0.0;
        out.s_max = 6.283185307179586476925286766559;
        out.t_min = 0.5;
        out.t_max = 1.0;
    } else {
        out.s_min = -1.0;
        out.s_max = 1.0;
        out.t_min = -1.0;
        out.t_max = 1.0;
    }
    out.xs = DenseMatrix(m, q);
    out.ys = DenseMatrix(m, q);
    out.zs = DenseMatrix(m, q);
    for (std::size_t i = 0; i < m; ++i) {
        const double s = out.s_min + (out.s_max - out.s_min) * static_cast<double>(i) /
                                         static_cast<double>(m - 1);
        for (std::size_t j = 0; j < q; ++j) {
            const double t = out.t_min + (out.t_max - out.t_min) * static_cast<double>(j) /
                                             static_cast<double>(q - 1);
            out.xs(i, j) = s;
            out.ys(i, j) = t;
            out.zs(i, j) = which == Surface::surface1
                               ? s * s * s - 3.0 * s * t * t
                               : (s - s * s * s - t * t * t * t * t) *
                                     std::exp(-s * s - t * t);
        }
    }
    return out;
}

namespace {

// Chord-length parameters for one grid axis, averaging the 3-D chord
// lengths of all grid curves along that axis before normalizing.
std::vector<double> mean_chord_params(const SurfaceSample& sample, bool along_rows) {
    const std::size_t m = sample.zs.rows();
    const std::size_t q = sample.zs.cols();
    const std::size_t len = along_rows ? m : q;
    const std::size_t curves = along_rows ? q : m;
    std::vector<double> chords(len - 1, 0.0);
    for (std::size_t c = 0; c < curves; ++c) {
        for (std::size_t i = 0; i + 1 < len; ++i) {
            const std::size_t r0 = along_rows ? i : c;
            const std::size_t c0 = along_rows ? c : i;
            const std::size_t r1 = along_rows ? i + 1 : c;
            const std::size_t c1 = along_rows ? c : i + 1;
            const double dx = sample.xs(r1, c1) - sample.xs(r0, c0);
            const double dy = sample.ys(r1, c1) - sample.ys(r0, c0);
            const double dz = sample.zs(r1, c1) - sample.zs(r0, c0);
            chords[i] += std::sqrt(dx * dx + dy * dy + dz * dz);
        }
    }
    double total = 0.0;
    for (double& c : chords) {
        c /= static_cast<double>(curves);
        if (c == 0.0)
            throw std::invalid_argument("surface parameterization: zero mean chord");
        total += c;
    }
    std::vector<double> params(len);
    params.front() = 0.0;
    double run = 0.0;
    for (std::size_t i = 0; i + 1 < len; ++i) {
        run += chords[i];
        params[i + 1] = run / total;
    }
    params.back() = 1.0;
    return params;
}

}  // namespace

ProblemInstance build_fitting_problem(Surface which, std::size_t m, std::size_t q,
                                      std::size_t n, std::size_t p) {
    if (n > m || p > q)
        throw std::invalid_argument("build_fitting_problem: need n <= m and p <= q");
    SurfaceSample sample = surface_samples(which, m, q);
    const std::vector<double> nu1 = mean_chord_params(sample, true);
    const std::vector<double> nu2 = mean_chord_params(sample, false);
    const std::vector<double> mu1 = averaging_knots(nu1, n);
    const std::vector<double> mu2 = averaging_knots(nu2, p);
    DenseMatrix a = bspline_collocation(nu1, mu1);       // m x n
    DenseMatrix bt = bspline_collocation(nu2, mu2);      // q x p
    DenseMatrix b = transpose(bt);                       // p x q

    DenseMatrix x_star = multiply(multiply(pseudoinverse(a), sample.zs), pseudoinverse(b));

    ProblemInstance inst;
    inst.a = std::move(a);
    inst.b = std::move(b);
    inst.f = sample.zs;
    inst.provenance.family = Family::bspline;
    inst.provenance.parameters = std::string(which == Surface::surface1 ? "surface1" : "surface2") +
                                 " m=" + std::to_string(m) + " q=" + std::to_string(q) +
                                 " n=" + std::to_string(n) + " p=" + std::to_string(p);
    inst.provenance.seed = 0;

    // x_star doubles as the consistency witness; for data outside the
    // spline space (approximation, not interpolation) the projection
    // residual is genuinely nonzero, so the reference is left implicit and
    // solvers fall back to computing pinv(A) F pinv(B) themselves.
    DenseMatrix reconstructed = multiply(inst.a, multiply(x_star, inst.b));
    const double residual =
        frobenius_norm(subtract(reconstructed, inst.f));
    if (residual <= 1e-10 * frobenius_norm(inst.f)) inst.x_star = std::move(x_star);
    return inst;
}

}  // namespace kmeq
