#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kmeq/bspline.hpp"
#include "kmeq/dense_matrix.hpp"
#include "kmeq/problems.hpp"

using namespace kmeq;

TEST_CASE("chord length parameters") {
    // equally spaced collinear points -> uniform parameters
    DenseMatrix line(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        line(i, 0) = double(i);
        line(i, 1) = 2.0 * double(i);
    }
    const std::vector<double> uniform = chord_length_params(line);
    REQUIRE(uniform.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(uniform[i] == doctest::Approx(0.25 * double(i)));

    // chords of lengths 1 and 3 -> (0, 0.25, 1)
    const DenseMatrix bent = DenseMatrix::from_data(3, 2, {0, 0, 1, 0, 4, 0});
    const std::vector<double> params = chord_length_params(bent);
    REQUIRE(params.size() == 3);
    CHECK(params[0] == 0.0);
    CHECK(params[1] == doctest::Approx(0.25));
    CHECK(params[2] == 1.0);

    const std::vector<double> two =
        chord_length_params(DenseMatrix::from_data(2, 1, {3, 7}));
    CHECK(two == std::vector<double>{0.0, 1.0});

    CHECK_THROWS_AS(chord_length_params(DenseMatrix::from_data(1, 2, {0, 0})),
                    std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        chord_length_params(DenseMatrix::from_data(3, 1, {0, 1, 1})),
        "chord_length_params: coincident consecutive points at index 1",
        std::invalid_argument);
}

TEST_CASE("averaging knots interpolation rule") {
    // Bezier case: no interior knots
    const std::vector<double> p4{0.0, 0.3, 0.8, 1.0};
    CHECK(averaging_knots(p4, 4) ==
          std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1});

    // n_ctrl == #params: interior knot j is the mean of params j..j+degree-1
    const std::vector<double> p6{0.0, 0.1, 0.4, 0.7, 0.9, 1.0};
    const std::vector<double> k6 = averaging_knots(p6, 6);
    REQUIRE(k6.size() == 10);
    CHECK(k6[4] == doctest::Approx((0.1 + 0.4 + 0.7) / 3.0));
    CHECK(k6[5] == doctest::Approx((0.4 + 0.7 + 0.9) / 3.0));
    for (int i = 0; i < 4; ++i) {
        CHECK(k6[i] == 0.0);
        CHECK(k6[6 + i] == 1.0);
    }
}

TEST_CASE("averaging knots with resampling for approximation") {
    // 9 uniform params resample exactly to 5; symmetry forces the single
    // interior knot to 0.5
    std::vector<double> p9(9);
    for (std::size_t i = 0; i < 9; ++i) p9[i] = double(i) / 8.0;
    const std::vector<double> k = averaging_knots(p9, 5);
    REQUIRE(k.size() == 9);
    CHECK(k[4] == doctest::Approx(0.5));

    // 5 uniform params directly give the same knot
    std::vector<double> p5(5);
    for (std::size_t i = 0; i < 5; ++i) p5[i] = double(i) / 4.0;
    CHECK(averaging_knots(p5, 5)[4] == doctest::Approx(0.5));
}

TEST_CASE("averaging knots on a surface parameter profile") {
    const SurfaceSample s = surface_samples(Surface::surface1, 150, 150);
    DenseMatrix axis(150, 3);
    for (std::size_t i = 0; i < 150; ++i) {
        axis(i, 0) = s.xs(i, 0);
        axis(i, 1) = s.ys(i, 0);
        axis(i, 2) = s.zs(i, 0);
    }
    const std::vector<double> params = chord_length_params(axis);
    const std::vector<double> knots = averaging_knots(params, 50);
    REQUIRE(knots.size() == 54);
    CHECK(std::is_sorted(knots.begin(), knots.end()));
    for (std::size_t i = 4; i + 4 < knots.size(); ++i) {
        CHECK(knots[i] > 0.0);
        CHECK(knots[i] < 1.0);
    }
}

TEST_CASE("averaging knots parameter errors") {
    const std::vector<double> p4{0.0, 0.3, 0.8, 1.0};
    CHECK_THROWS_AS(averaging_knots(p4, 5), std::invalid_argument);  // under-determined
    CHECK_THROWS_AS(averaging_knots(p4, 3), std::invalid_argument);  // too few ctrl
    const std::vector<double> unsorted{0.0, 0.5, 0.2, 1.0};
    CHECK_THROWS_AS(averaging_knots(unsorted, 4), std::invalid_argument);
    const std::vector<double> outside{0.0, 0.5, 1.5, 2.0};
    CHECK_THROWS_AS(averaging_knots(outside, 4), std::invalid_argument);
}

TEST_CASE("collocation endpoint and Bernstein values") {
    const std::vector<double> bezier{0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<double> params{0.0, 0.5, 1.0};
    const DenseMatrix c = bspline_collocation(params, bezier);
    REQUIRE(c.rows() == 3);
    REQUIRE(c.cols() == 4);

    CHECK(c(0, 0) == doctest::Approx(1.0));
    CHECK(c(0, 1) == doctest::Approx(0.0));
    CHECK(c(0, 2) == doctest::Approx(0.0));
    CHECK(c(0, 3) == doctest::Approx(0.0));

    CHECK(c(1, 0) == doctest::Approx(0.125));
    CHECK(c(1, 1) == doctest::Approx(0.375));
    CHECK(c(1, 2) == doctest::Approx(0.375));
    CHECK(c(1, 3) == doctest::Approx(0.125));

    CHECK(c(2, 3) == doctest::Approx(1.0));
    CHECK(c(2, 0) == doctest::Approx(0.0));
}

TEST_CASE("collocation rows are a nonnegative partition of unity with short support") {
    std::vector<double> params(101);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = double(i) / 100.0;
    const std::vector<double> knots = averaging_knots(params, 20);
    const DenseMatrix c = bspline_collocation(params, knots);
    REQUIRE(c.rows() == 101);
    REQUIRE(c.cols() == 20);
    for (std::size_t i = 0; i < c.rows(); ++i) {
        double sum = 0.0;
        std::size_t nonzeros = 0;
        for (std::size_t j = 0; j < c.cols(); ++j) {
            CHECK(c(i, j) >= 0.0);
            sum += c(i, j);
            if (c(i, j) != 0.0) ++nonzeros;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        CHECK(nonzeros <= 4);
    }
}

TEST_CASE("collocation input validation") {
    const std::vector<double> bezier{0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<double> outside{0.0, 1.5};
    CHECK_THROWS_AS(bspline_collocation(outside, bezier), std::invalid_argument);
    const std::vector<double> negative{-0.1};
    CHECK_THROWS_AS(bspline_collocation(negative, bezier), std::invalid_argument);

    const std::vector<double> ok{0.5};
    const std::vector<double> unsorted{0, 0, 0, 0, 0.6, 0.4, 1, 1, 1, 1};
    CHECK_THROWS_AS(bspline_collocation(ok, unsorted), std::invalid_argument);
    const std::vector<double> too_short{0, 0, 1};
    CHECK_THROWS_AS(bspline_collocation(ok, too_short), std::invalid_argument);
    const std::vector<double> none{};
    CHECK_THROWS_AS(bspline_collocation(none, bezier), std::invalid_argument);
}
