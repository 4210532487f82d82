#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kmeq/dense_matrix.hpp"
#include "kmeq/linalg.hpp"
#include "kmeq/problems.hpp"

using namespace kmeq;

namespace {

double consistency_residual(const ProblemInstance& inst) {
    REQUIRE(inst.x_star.has_value());
    const DenseMatrix rebuilt = multiply(inst.a, multiply(*inst.x_star, inst.b));
    return frobenius_norm(subtract(rebuilt, inst.f));
}

}  // namespace

TEST_CASE("gaussian instances have the documented shapes and reference") {
    const ProblemInstance inst = gen_gaussian(350, 210, 210, 350, 5);
    CHECK(inst.a.rows() == 350);
    CHECK(inst.a.cols() == 210);
    CHECK(inst.b.rows() == 210);
    CHECK(inst.b.cols() == 350);
    CHECK(inst.f.rows() == 350);
    CHECK(inst.f.cols() == 350);
    REQUIRE(inst.x_star.has_value());
    CHECK(inst.x_star->rows() == 210);
    CHECK(inst.x_star->cols() == 210);
    for (std::size_t i = 0; i < 5; ++i) CHECK((*inst.x_star)(i, i) == 1.0);
    CHECK(consistency_residual(inst) <= 1e-10 * frobenius_norm(inst.f));
    CHECK(inst.provenance.family == Family::gaussian);
    CHECK(inst.provenance.seed == 5);
}

TEST_CASE("gaussian determinism and scalar-core rank") {
    const ProblemInstance a = gen_gaussian(12, 4, 3, 9, 77);
    const ProblemInstance b = gen_gaussian(12, 4, 3, 9, 77);
    CHECK(frobenius_norm(subtract(a.a, b.a)) == 0.0);
    CHECK(frobenius_norm(subtract(a.b, b.b)) == 0.0);
    CHECK(frobenius_norm(subtract(a.f, b.f)) == 0.0);
    const ProblemInstance c = gen_gaussian(12, 4, 3, 9, 78);
    CHECK(frobenius_norm(subtract(a.a, c.a)) > 0.0);

    // n = p = 1 forces rank-1 F: all 2x2 minors vanish
    const ProblemInstance r1 = gen_gaussian(6, 1, 1, 5, 3);
    const double scale = frobenius_norm(r1.f);
    for (std::size_t i = 1; i < 6; ++i)
        for (std::size_t j = 1; j < 5; ++j)
            CHECK(std::abs(r1.f(i, j) * r1.f(0, 0) - r1.f(i, 0) * r1.f(0, j)) <
                  1e-12 * scale * scale);

    CHECK_THROWS_AS(gen_gaussian(0, 1, 1, 1, 0), std::invalid_argument);
    CHECK_NOTHROW(gen_gaussian(10, 20, 5, 10, 0));  // regime violation only warns
}

TEST_CASE("smatrix spectrum is pinned and bounded") {
    // r = 2 leaves no uniform entries: exactly {sigma1, sigma2}
    const DenseMatrix two = gen_smatrix(6, 5, 2, 3.0, 0.5, 11);
    const std::vector<double> sv2 = svd(two).singular_values;
    CHECK(std::abs(sv2[0] - 3.0) < 1e-8);
    CHECK(std::abs(sv2[1] - 0.5) < 1e-8);
    for (std::size_t i = 2; i < sv2.size(); ++i) CHECK(sv2[i] < 1e-8);

    const DenseMatrix mid = gen_smatrix(30, 20, 8, 4.0, 0.25, 3);
    const std::vector<double> sv = svd(mid).singular_values;
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(sv[i] >= 0.25 - 1e-8);
        CHECK(sv[i] <= 4.0 + 1e-8);
    }
    CHECK(std::abs(sv[0] - 4.0) < 1e-8);
    CHECK(std::abs(sv[7] - 0.25) < 1e-8);
    for (std::size_t i = 8; i < sv.size(); ++i) CHECK(sv[i] < 1e-8);

    // equal endpoints collapse the spectrum to a single value
    const DenseMatrix flat = gen_smatrix(10, 10, 4, 2.0, 2.0, 9);
    const std::vector<double> svf = svd(flat).singular_values;
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(svf[i] - 2.0) < 1e-8);

    const DenseMatrix again = gen_smatrix(30, 20, 8, 4.0, 0.25, 3);
    CHECK(frobenius_norm(subtract(mid, again)) == 0.0);
}

TEST_CASE("smatrix condition number matches the construction") {
    const DenseMatrix m = gen_smatrix(1000, 100, 100, 10.0, 0.1, 1);
    CHECK(m.rows() == 1000);
    CHECK(m.cols() == 100);
    const auto [lo, hi] = extreme_singular_values(m);
    CHECK(std::abs(hi / lo - 100.0) < 1e-6);
}

TEST_CASE("smatrix parameter validation") {
    CHECK_THROWS_AS(gen_smatrix(6, 5, 1, 3.0, 0.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_smatrix(6, 5, 6, 3.0, 0.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_smatrix(6, 5, 3, 0.5, 3.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_smatrix(6, 5, 3, 3.0, 0.0, 0), std::invalid_argument);
}

TEST_CASE("consistent instance construction") {
    const ProblemInstance id = make_consistent_instance(
        DenseMatrix::identity(3), DenseMatrix::identity(4),
        DenseMatrix::filled(3, 4, 1.0));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(id.f(i, j) == 1.0);

    const ProblemInstance zero = make_consistent_instance(
        DenseMatrix::identity(3), DenseMatrix::identity(3), DenseMatrix(3, 3));
    CHECK(frobenius_norm(zero.f) == 0.0);

    const ProblemInstance g = gen_gaussian(100, 20, 20, 100, 42);
    const ProblemInstance rebuilt = make_consistent_instance(g.a, g.b);
    REQUIRE(rebuilt.x_star.has_value());
    CHECK((*rebuilt.x_star)(7, 3) == 1.0);  // default reference is all-ones
    CHECK(consistency_residual(rebuilt) <= 1e-10 * frobenius_norm(rebuilt.f));

    CHECK_THROWS_AS(
        make_consistent_instance(DenseMatrix::identity(3), DenseMatrix::identity(4),
                                 DenseMatrix(4, 4)),
        std::invalid_argument);
}

TEST_CASE("surface grids follow the stated formulas") {
    const SurfaceSample s1 = surface_samples(Surface::surface1, 150, 150);
    CHECK(s1.xs.rows() == 150);
    CHECK(s1.xs.cols() == 150);
    CHECK(s1.s_min == 0.0);
    CHECK(s1.s_max == doctest::Approx(2.0 * std::acos(-1.0)));
    CHECK(s1.t_min == 0.5);
    CHECK(s1.t_max == 1.0);
    // s = 0 zeroes both terms at every t, in particular at t = 1
    CHECK(s1.zs(0, 149) == 0.0);
    for (std::size_t i : {std::size_t{17}, std::size_t{80}}) {
        for (std::size_t j : {std::size_t{3}, std::size_t{120}}) {
            const double s = s1.xs(i, j);
            const double t = s1.ys(i, j);
            CHECK(s1.zs(i, j) == doctest::Approx(s * s * s - 3.0 * s * t * t));
        }
    }

    const SurfaceSample s2 = surface_samples(Surface::surface2, 3, 3);
    CHECK(s2.s_min == -1.0);
    CHECK(s2.t_max == 1.0);
    CHECK(s2.zs(1, 1) == 0.0);                                   // (s,t) = (0,0)
    CHECK(s2.zs(0, 0) == doctest::Approx(std::exp(-2.0)));       // (-1,-1)
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::isfinite(s2.zs(i, j)));

    CHECK_THROWS_AS(surface_samples(Surface::surface1, 1, 5), std::invalid_argument);
}

TEST_CASE("fitting problem shapes and polynomial surface consistency") {
    const ProblemInstance inst = build_fitting_problem(Surface::surface1, 150, 150, 50, 50);
    CHECK(inst.a.rows() == 150);
    CHECK(inst.a.cols() == 50);
    CHECK(inst.b.rows() == 50);
    CHECK(inst.b.cols() == 150);
    CHECK(inst.f.rows() == 150);
    CHECK(inst.f.cols() == 150);
    CHECK(inst.provenance.family == Family::bspline);
    // approximation (n < m): the least-squares projection leaves a genuine
    // residual, so no exact reference is attached and solvers fall back to
    // the minimum-norm least-squares point; the residual is still small
    CHECK(!inst.x_star.has_value());
    const DenseMatrix ref =
        multiply(multiply(pseudoinverse(inst.a), inst.f), pseudoinverse(inst.b));
    const double residual =
        frobenius_norm(subtract(multiply(inst.a, multiply(ref, inst.b)), inst.f));
    CHECK(residual > 1e-10 * frobenius_norm(inst.f));
    CHECK(residual < 1e-4 * frobenius_norm(inst.f));

    const ProblemInstance s2 = build_fitting_problem(Surface::surface2, 60, 60, 20, 20);
    CHECK(!s2.x_star.has_value());

    CHECK_THROWS_AS(build_fitting_problem(Surface::surface1, 10, 10, 11, 10),
                    std::invalid_argument);
}

TEST_CASE("square fitting problem interpolates") {
    // n = m, p = q: square collocation matrices interpolate the grid exactly,
    // so the reference is attached and consistent
    const ProblemInstance inst = build_fitting_problem(Surface::surface1, 40, 40, 40, 40);
    REQUIRE(inst.x_star.has_value());
    CHECK(consistency_residual(inst) <= 1e-10 * frobenius_norm(inst.f));
}

TEST_CASE("fitting reference is linear in the data") {
    const ProblemInstance inst = build_fitting_problem(Surface::surface1, 50, 50, 20, 20);
    const DenseMatrix ap = pseudoinverse(inst.a);
    const DenseMatrix bp = pseudoinverse(inst.b);
    const DenseMatrix x1 = multiply(multiply(ap, inst.f), bp);
    DenseMatrix doubled = inst.f;
    for (std::size_t i = 0; i < doubled.rows(); ++i)
        for (std::size_t j = 0; j < doubled.cols(); ++j) doubled(i, j) *= 2.0;
    const DenseMatrix x2 = multiply(multiply(ap, doubled), bp);
    DenseMatrix expected = x1;
    for (std::size_t i = 0; i < expected.rows(); ++i)
        for (std::size_t j = 0; j < expected.cols(); ++j) expected(i, j) *= 2.0;
    CHECK(frobenius_norm(subtract(x2, expected)) <=
          1e-12 * (1.0 + frobenius_norm(expected)));
}
