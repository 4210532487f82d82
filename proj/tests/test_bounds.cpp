#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kmeq/bounds.hpp"
#include "kmeq/dense_matrix.hpp"
#include "kmeq/linalg.hpp"
#include "kmeq/partition.hpp"
#include "kmeq/problems.hpp"
#include "kmeq/rng.hpp"
#include "kmeq/solvers.hpp"

using namespace kmeq;

namespace {

PavingBounds craft(double alpha, double beta, std::size_t blocks) {
    PavingBounds p;
    p.alpha = alpha;
    p.beta = beta;
    p.block_count = blocks;
    p.max_cond_sq = beta / alpha;
    return p;
}

Partition singletons(std::size_t universe) {
    Partition p;
    p.universe_size = universe;
    p.blocks.resize(universe);
    for (std::size_t i = 0; i < universe; ++i) p.blocks[i] = {i};
    return p;
}

Partition full_block(std::size_t universe) {
    Partition p;
    p.universe_size = universe;
    p.blocks.resize(1);
    for (std::size_t i = 0; i < universe; ++i) p.blocks[0].push_back(i);
    return p;
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("per step factors from direct substitution") {
    CHECK(arbk_y_factor(DenseMatrix::identity(2), 1, 1.0) == doctest::Approx(0.0));
    const DenseMatrix d = DenseMatrix::from_data(2, 2, {10, 0, 0, 0.1});
    CHECK(arbk_y_factor(d, 1, 100.0) == doctest::Approx(0.9999));
    CHECK(arbk_x_factor(DenseMatrix::identity(2), 1, 1.0) == doctest::Approx(0.0));
    CHECK(arbk_x_factor(d, 1, 100.0) == doctest::Approx(0.9999));

    // beta too small for this matrix: factor would leave [0, 1)
    CHECK_THROWS_AS(arbk_y_factor(DenseMatrix::identity(2), 1, 0.5), std::domain_error);
    CHECK_THROWS_AS(arbk_x_factor(DenseMatrix::identity(2), 1, 0.5), std::domain_error);
}

TEST_CASE("factor from a measured paving drives the mean y decay") {
    const ProblemInstance pb = gen_gaussian(50, 10, 10, 50, 211);
    Rng prng(212);
    const Partition s = row_random_partition(50, 5, prng);
    const Partition t = column_random_partition(50, 5, prng);
    const BlockCache cache = build_block_cache(pb.a, s, pb.b, t);
    const PavingBounds sb = row_paving_bounds(pb.a, s);
    const double gamma = arbk_y_factor(pb.a, 5, sb.beta);
    CHECK(gamma > 0.0);
    CHECK(gamma < 1.0);

    const DenseMatrix y_star = multiply(pseudoinverse(pb.a), pb.f);
    const double d0_sq = frobenius_norm(y_star) * frobenius_norm(y_star);
    const int runs = 200, steps = 20;
    double total = 0.0;
    for (int r = 0; r < runs; ++r) {
        SolverState st;
        st.x = DenseMatrix(10, 10);
        st.y = DenseMatrix(10, 50);
        Rng rng(3000 + std::uint64_t(r));
        for (int k = 0; k < steps; ++k)
            arbk_y_step(st, pb.a, pb.f, s, rng.below(5), cache);
        const DenseMatrix diff = subtract(st.y, y_star);
        const double d = frobenius_norm(diff);
        total += d * d;
    }
    CHECK(total / runs <= std::pow(gamma, steps) * d0_sq * 1.1);
}

TEST_CASE("error bound closed forms") {
    const DenseMatrix eye = DenseMatrix::identity(2);

    // gamma_hat = gamma_tilde = 0.5 and sigma_max^2(B) = t * alpha_B:
    // k = 0 gives (g + g) * x0 = x0
    const PavingBounds s_info = craft(1.0, 2.0, 1);
    const PavingBounds t_info = craft(1.0, 2.0, 1);
    CHECK(arbk_x_error_bound(0, eye, eye, s_info, t_info, 3.0) == doctest::Approx(3.0));

    // gamma_hat = 0 (full-block row side): pure B-side contraction
    const PavingBounds tight = craft(1.0, 1.0, 1);
    CHECK(arbk_x_error_bound(3, eye, eye, tight, t_info, 16.0) ==
          doctest::Approx(std::pow(0.5, 4) * 16.0));

    // gamma_tilde = 0: only the l = k term of the series survives
    CHECK(arbk_x_error_bound(3, eye, eye, s_info, tight, 16.0) ==
          doctest::Approx(std::pow(0.5, 4) * 16.0));
    CHECK(std::isfinite(arbk_x_error_bound(100, eye, eye, s_info, tight, 1.0)));

    CHECK_THROWS_AS(arbk_x_error_bound(0, eye, eye, s_info, t_info, -1.0),
                    std::invalid_argument);
}

TEST_CASE("bound curve matches single evaluations and eventually decreases") {
    const ProblemInstance pb = gen_gaussian(40, 10, 10, 40, 221);
    Rng prng(222);
    const Partition s = row_random_partition(40, 4, prng);
    const Partition t = column_random_partition(40, 4, prng);
    const PavingBounds sb = row_paving_bounds(pb.a, s);
    const PavingBounds tb = col_paving_bounds(pb.b, t);
    const double x0 = 7.5;

    std::vector<std::size_t> ks;
    for (std::size_t k = 0; k <= 1000; ++k) ks.push_back(k);
    const std::vector<double> curve = arbk_x_error_bound_curve(ks, pb.a, pb.b, sb, tb, x0);
    REQUIRE(curve.size() == ks.size());

    for (std::size_t k : {std::size_t{0}, std::size_t{1}, std::size_t{2},
                          std::size_t{5}, std::size_t{10}, std::size_t{100},
                          std::size_t{1000}}) {
        const double single = arbk_x_error_bound(k, pb.a, pb.b, sb, tb, x0);
        CHECK(std::abs(curve[k] - single) <= 1e-13 * (1.0 + single));
    }

    // gammabar_k (bound with the tilde power divided out) never decreases
    const double gamma_tilde = arbk_x_factor(pb.b, 4, tb.beta);
    for (std::size_t k = 0; k + 1 <= 50; ++k) {
        const double gb_k = curve[k] / std::pow(gamma_tilde, k + 1);
        const double gb_next = curve[k + 1] / std::pow(gamma_tilde, k + 2);
        CHECK(gb_next >= gb_k * (1.0 - 1e-12));
    }

    // the bound itself decreases once the series has flattened
    for (std::size_t k = 500; k + 1 <= 1000; ++k)
        CHECK(curve[k + 1] <= curve[k] * (1.0 + 1e-12));
    CHECK(curve[1000] < curve[500]);
}

TEST_CASE("row column kaczmarz factors") {
    const auto [r1, r2] = cme_rk_factors(DenseMatrix::identity(3), DenseMatrix::identity(4));
    CHECK(r1 == doctest::Approx(1.0 - 1.0 / 3.0));
    CHECK(r2 == doctest::Approx(1.0 - 1.0 / 4.0));

    DenseMatrix scaled = DenseMatrix::identity(4);
    for (std::size_t i = 0; i < 4; ++i) scaled(i, i) = 2.5;
    const auto [s1, s2] = cme_rk_factors(scaled, scaled);
    CHECK(s1 == doctest::Approx(0.75));
    CHECK(s2 == doctest::Approx(0.75));

    const DenseMatrix a = gen_smatrix(1000, 100, 100, 10.0, 0.1, 1);
    const auto [rho1, rho2] = cme_rk_factors(a, DenseMatrix::identity(4));
    const std::vector<double> sv = svd(a).singular_values;
    double fro_sq = 0.0;
    for (double v : sv) fro_sq += v * v;
    const double direct = 1.0 - sv.back() * sv.back() / fro_sq;
    CHECK(std::abs(rho1 - direct) < 1e-12);

    CHECK_THROWS_AS(cme_rk_factors(DenseMatrix(3, 3), DenseMatrix::identity(3)),
                    std::domain_error);
}

TEST_CASE("norm weighted block factor") {
    const DenseMatrix eye4 = DenseMatrix::identity(4);
    CHECK(grbk_factor(eye4, eye4, singletons(4), singletons(4)) ==
          doctest::Approx(1.0 - 1.0 / 16.0));

    // orthogonal matrices with single full blocks: beta_max^2 = 1/n wipes
    // out the factor entirely (one-iteration convergence)
    CHECK(grbk_factor(eye4, eye4, full_block(4), full_block(4)) ==
          doctest::Approx(0.0));

    CHECK_THROWS_AS(
        grbk_factor(DenseMatrix(4, 4), eye4, singletons(4), singletons(4)),
        std::domain_error);
}

TEST_CASE("weighted factor exceeds the alternating x factor on normalized data") {
    // with equal block sizes and unit rows of A / unit columns of B the
    // weighted factor collapses to 1 - [smin^2(A)/(s beta_A)][smin^2(B)/(t beta_B)],
    // which subtracts less than the alternating method's x factor does
    Rng rng(77);
    DenseMatrix a = random_matrix(30, 6, rng);
    DenseMatrix b = random_matrix(6, 30, rng);
    for (std::size_t i = 0; i < 30; ++i) {
        double ra = 0.0, cb = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            ra += a(i, j) * a(i, j);
            cb += b(j, i) * b(j, i);
        }
        for (std::size_t j = 0; j < 6; ++j) {
            a(i, j) /= std::sqrt(ra);
            b(j, i) /= std::sqrt(cb);
        }
    }
    Rng prng(78);
    const Partition s = row_random_partition(30, 5, prng);  // five blocks of six
    const Partition t = column_random_partition(30, 5, prng);
    const PavingBounds sb = row_paving_bounds(a, s);
    const PavingBounds tb = col_paving_bounds(b, t);

    const auto [amin, amax] = extreme_singular_values(a);
    const auto [bmin, bmax] = extreme_singular_values(b);
    const double product_form =
        1.0 - (amin * amin / (5.0 * sb.beta)) * (bmin * bmin / (5.0 * tb.beta));
    const double weighted = grbk_factor(a, b, s, t);
    CHECK(weighted < 1.0);
    CHECK(std::abs(weighted - product_form) < 1e-12);

    const double gamma_tilde = arbk_x_factor(b, 5, tb.beta);
    CHECK(gamma_tilde < weighted);
}

TEST_CASE("all factors stay inside the unit interval on seeded instances") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const ProblemInstance pb = gen_gaussian(36, 8, 8, 36, seed);
        Rng prng(seed + 100);
        const Partition s = row_random_partition(36, 4, prng);
        const Partition t = column_random_partition(36, 4, prng);
        const ConvergenceFactors f = convergence_factors(pb.a, pb.b, s, t);
        for (double v : {f.gamma_hat, f.gamma_tilde, f.rho1, f.rho2, f.grbk_factor}) {
            CHECK(v >= 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("y factor is invariant under matrix rescaling") {
    Rng rng(301);
    const DenseMatrix a = random_matrix(24, 6, rng);
    DenseMatrix a3 = a;
    for (std::size_t i = 0; i < a3.rows(); ++i)
        for (std::size_t j = 0; j < a3.cols(); ++j) a3(i, j) *= 3.0;
    Rng prng(302);
    const Partition s = row_random_partition(24, 4, prng);
    const double g1 = arbk_y_factor(a, 4, row_paving_bounds(a, s).beta);
    const double g3 = arbk_y_factor(a3, 4, row_paving_bounds(a3, s).beta);
    CHECK(std::abs(g1 - g3) < 1e-12);
}
