#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kmeq/dense_matrix.hpp"
#include "kmeq/errors.hpp"
#include "kmeq/linalg.hpp"
#include "kmeq/partition.hpp"
#include "kmeq/problems.hpp"
#include "kmeq/rng.hpp"

using namespace kmeq;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

double frob_diff(const DenseMatrix& a, const DenseMatrix& b) {
    return frobenius_norm(subtract(a, b));
}

DenseMatrix reconstruct(const SvdResult& r) {
    DenseMatrix scaled = r.left_vectors;  // columns scaled by sigma
    for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= r.singular_values[j];
    return multiply(scaled, transpose(r.right_vectors));
}

}  // namespace

TEST_CASE("dense matrix construction and validation") {
    DenseMatrix z(2, 3);
    CHECK(z.rows() == 2);
    CHECK(z.cols() == 3);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(z(i, j) == 0.0);
    CHECK_THROWS_AS(DenseMatrix(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(DenseMatrix(3, 0), std::invalid_argument);

    DenseMatrix m = DenseMatrix::from_data(2, 2, {1, 2, 3, 4});
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 0) == 3.0);
    CHECK_THROWS_AS(DenseMatrix::from_data(2, 2, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(DenseMatrix::from_data(1, 2, {1.0, std::nan("")}), std::invalid_argument);

    DenseMatrix id = DenseMatrix::identity(3);
    CHECK(id(0, 0) == 1.0);
    CHECK(id(0, 1) == 0.0);
    CHECK(DenseMatrix::filled(2, 2, 7.0)(1, 1) == 7.0);
}

TEST_CASE("matrix product and transpose basics") {
    const DenseMatrix a = DenseMatrix::from_data(2, 3, {1, 2, 3, 4, 5, 6});
    const DenseMatrix b = DenseMatrix::from_data(3, 2, {7, 8, 9, 10, 11, 12});
    const DenseMatrix c = multiply(a, b);
    CHECK(c(0, 0) == 58.0);
    CHECK(c(0, 1) == 64.0);
    CHECK(c(1, 0) == 139.0);
    CHECK(c(1, 1) == 154.0);
    const DenseMatrix at = transpose(a);
    CHECK(at.rows() == 3);
    CHECK(at(0, 1) == 4.0);
    CHECK_THROWS_AS(multiply(a, a), std::invalid_argument);

    DenseMatrix acc = DenseMatrix::filled(2, 2, 1.0);
    multiply_into(acc, a, b, 2.0, 1.0);
    CHECK(acc(0, 0) == doctest::Approx(117.0));
}

TEST_CASE("frobenius norm and inner product examples") {
    CHECK(frobenius_norm(DenseMatrix(3, 3)) == 0.0);
    CHECK(frobenius_norm(DenseMatrix::identity(2)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(frobenius_norm(DenseMatrix::from_data(1, 2, {3, 4})) == doctest::Approx(5.0));

    CHECK(frobenius_inner(DenseMatrix::identity(2), DenseMatrix::identity(2)) ==
          doctest::Approx(2.0));
    const DenseMatrix m = DenseMatrix::from_data(2, 2, {1, 2, 3, 4});
    CHECK(frobenius_inner(m, m) == doctest::Approx(30.0));
    CHECK(frobenius_inner(DenseMatrix::from_data(1, 2, {1, 0}),
                          DenseMatrix::from_data(1, 2, {0, 1})) == 0.0);
    CHECK_THROWS_AS(frobenius_inner(m, DenseMatrix(3, 3)), std::invalid_argument);
}

TEST_CASE("norm squared equals self inner product") {
    Rng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        const DenseMatrix m = random_matrix(1 + rng.below(8), 1 + rng.below(8), rng);
        const double n2 = frobenius_norm(m) * frobenius_norm(m);
        CHECK(n2 == doctest::Approx(frobenius_inner(m, m)).epsilon(1e-14));
    }
}

TEST_CASE("svd diagonal and permutation examples") {
    const SvdResult d = svd(DenseMatrix::from_data(2, 2, {3, 0, 0, 1}));
    REQUIRE(d.singular_values.size() == 2);
    CHECK(d.singular_values[0] == doctest::Approx(3.0));
    CHECK(d.singular_values[1] == doctest::Approx(1.0));

    const SvdResult p = svd(DenseMatrix::from_data(2, 2, {0, 1, 1, 0}));
    CHECK(p.singular_values[0] == doctest::Approx(1.0));
    CHECK(p.singular_values[1] == doctest::Approx(1.0));
}

TEST_CASE("svd produces orthonormal factors on a seeded 5x3") {
    Rng rng(7);
    const DenseMatrix m = random_matrix(5, 3, rng);
    const SvdResult r = svd(m);
    const DenseMatrix utu = multiply(transpose(r.left_vectors), r.left_vectors);
    const DenseMatrix vtv = multiply(transpose(r.right_vectors), r.right_vectors);
    CHECK(frob_diff(utu, DenseMatrix::identity(3)) < 1e-10);
    CHECK(frob_diff(vtv, DenseMatrix::identity(3)) < 1e-10);
    CHECK(frob_diff(reconstruct(r), m) < 1e-10 * r.singular_values[0]);
}

TEST_CASE("svd handles fat, square, thin and zero inputs") {
    Rng rng(11);
    for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{3, 7},
                              {7, 3},
                              {4, 4},
                              {1, 6},
                              {6, 1}}) {
        const DenseMatrix m = random_matrix(rows, cols, rng);
        const SvdResult r = svd(m);
        REQUIRE(r.singular_values.size() == std::min(rows, cols));
        for (std::size_t i = 0; i + 1 < r.singular_values.size(); ++i)
            CHECK(r.singular_values[i] >= r.singular_values[i + 1]);
        CHECK(r.singular_values.back() >= 0.0);
        CHECK(frob_diff(reconstruct(r), m) < 1e-10 * (1.0 + r.singular_values[0]));
    }
    const SvdResult z = svd(DenseMatrix(3, 2));
    for (double s : z.singular_values) CHECK(s == 0.0);
    CHECK(frobenius_norm(reconstruct(z)) == 0.0);
}

TEST_CASE("pseudoinverse examples") {
    const DenseMatrix d = pseudoinverse(DenseMatrix::from_data(2, 2, {2, 0, 0, 0}));
    CHECK(d(0, 0) == doctest::Approx(0.5));
    CHECK(std::abs(d(0, 1)) < 1e-14);
    CHECK(std::abs(d(1, 0)) < 1e-14);
    CHECK(std::abs(d(1, 1)) < 1e-14);

    // row vector: pinv(a) = a^T / ||a||^2
    const DenseMatrix a = DenseMatrix::from_data(1, 3, {1, 2, 2});
    const DenseMatrix ap = pseudoinverse(a);
    REQUIRE(ap.rows() == 3);
    REQUIRE(ap.cols() == 1);
    CHECK(ap(0, 0) == doctest::Approx(1.0 / 9.0));
    CHECK(ap(1, 0) == doctest::Approx(2.0 / 9.0));
    CHECK(ap(2, 0) == doctest::Approx(2.0 / 9.0));

    Rng rng(13);
    const DenseMatrix m = random_matrix(4, 2, rng);
    CHECK(frob_diff(multiply(pseudoinverse(m), m), DenseMatrix::identity(2)) < 1e-10);
}

TEST_CASE("penrose conditions over a seeded corpus with rank deficiency") {
    Rng rng(101);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t rows = 1 + rng.below(20);
        const std::size_t cols = 1 + rng.below(20);
        DenseMatrix m(1, 1);
        if (rep % 3 == 0) {
            const std::size_t r = 1 + rng.below(std::min(rows, cols));
            m = multiply(random_matrix(rows, r, rng), random_matrix(r, cols, rng));
        } else {
            m = random_matrix(rows, cols, rng);
        }
        const DenseMatrix mp = pseudoinverse(m);
        const double smax = extreme_singular_values(m).second;
        const double tol = 1e-8 * (1.0 + smax);
        CAPTURE(rep);
        CHECK(frob_diff(multiply(multiply(m, mp), m), m) < tol);
        CHECK(frob_diff(multiply(multiply(mp, m), mp), mp) < tol);
        const DenseMatrix mmp = multiply(m, mp);
        const DenseMatrix mpm = multiply(mp, m);
        CHECK(frob_diff(mmp, transpose(mmp)) < tol);
        CHECK(frob_diff(mpm, transpose(mpm)) < tol);

        const SvdResult r = svd(m);
        CHECK(frob_diff(reconstruct(r), m) < 1e-10 * (1.0 + r.singular_values[0]));
    }
}

TEST_CASE("default rank tolerance rule") {
    const double eps = std::numeric_limits<double>::epsilon();
    CHECK(default_rank_tol(4, 2, 10.0) == doctest::Approx(4 * eps * 10.0));
    CHECK(default_rank_tol(2, 7, 3.0) == doctest::Approx(7 * eps * 3.0));
}

TEST_CASE("extreme singular values") {
    const auto id = extreme_singular_values(DenseMatrix::identity(3));
    CHECK(id.first == doctest::Approx(1.0));
    CHECK(id.second == doctest::Approx(1.0));

    const auto d = extreme_singular_values(DenseMatrix::from_data(2, 2, {10, 0, 0, 0.1}));
    CHECK(d.first == doctest::Approx(0.1));
    CHECK(d.second == doctest::Approx(10.0));

    // rank-deficient: smallest NONZERO singular value
    const auto rd = extreme_singular_values(DenseMatrix::from_data(3, 3, {3, 0, 0, 0, 2, 0, 0, 0, 0}));
    CHECK(rd.first == doctest::Approx(2.0));
    CHECK(rd.second == doctest::Approx(3.0));

    CHECK_THROWS_AS(extreme_singular_values(DenseMatrix(4, 4)), std::domain_error);

    const DenseMatrix sm = gen_smatrix(100, 40, 40, 10.0, 0.1, 5);
    const auto ex = extreme_singular_values(sm);
    CHECK(std::abs(ex.first - 0.1) < 1e-8);
    CHECK(std::abs(ex.second - 10.0) < 1e-8);
}

TEST_CASE("row and column extraction") {
    const DenseMatrix id = DenseMatrix::identity(3);
    const std::vector<std::size_t> u{0, 2};
    const DenseMatrix r = take_rows(id, u);
    CHECK(r.rows() == 2);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(1, 2) == 1.0);
    CHECK(r(1, 0) == 0.0);

    const std::vector<std::size_t> v{1};
    const DenseMatrix c = take_cols(id, v);
    CHECK(c.rows() == 3);
    CHECK(c.cols() == 1);
    CHECK(c(1, 0) == 1.0);

    Rng rng(3);
    const DenseMatrix m = random_matrix(4, 5, rng);
    const std::vector<std::size_t> all{0, 1, 2, 3};
    CHECK(frob_diff(take_rows(m, all), m) == 0.0);

    const std::vector<std::size_t> oob{0, 9};
    CHECK_THROWS_AS(take_rows(m, oob), std::out_of_range);
    const std::vector<std::size_t> dup{1, 1};
    CHECK_THROWS_AS(take_rows(m, dup), std::invalid_argument);
    const std::vector<std::size_t> none{};
    CHECK_THROWS_AS(take_cols(m, none), std::invalid_argument);
}

TEST_CASE("pseudoinverse of numerically rank-deficient collocation blocks") {
    // random row blocks of a spline collocation matrix have whole groups of
    // near-dependent columns (local basis support); the pseudoinverse must
    // still come back with the Penrose identities intact
    const ProblemInstance inst = build_fitting_problem(Surface::surface1, 150, 150, 50, 50);
    Rng rng(480);
    const Partition s = row_random_partition(150, 3, rng);
    const Partition t = column_random_partition(150, 3, rng);
    // kept spectra of these blocks run down to ~1e-10, so ||pinv|| reaches
    // ~1e9 and the P-side identities can only hold relative to that scale
    for (const auto& block : s.blocks) {
        const DenseMatrix a_u = take_rows(inst.a, block);
        const DenseMatrix pinv = pseudoinverse(a_u);
        const double m_tol = 1e-6 * (1.0 + extreme_singular_values(a_u).second);
        const double p_tol = 1e-6 * (1.0 + frobenius_norm(pinv));
        const DenseMatrix mp = multiply(a_u, pinv);
        const DenseMatrix pm = multiply(pinv, a_u);
        CHECK(frob_diff(multiply(mp, a_u), a_u) <= m_tol);
        CHECK(frob_diff(multiply(pm, pinv), pinv) <= p_tol);
        CHECK(frob_diff(transpose(mp), mp) <= 1e-4);
        CHECK(frob_diff(transpose(pm), pm) <= 1e-4);
    }
    for (const auto& block : t.blocks) {
        const DenseMatrix b_v = take_cols(inst.b, block);
        const DenseMatrix pinv = pseudoinverse(b_v);
        const double m_tol = 1e-6 * (1.0 + extreme_singular_values(b_v).second);
        const double p_tol = 1e-6 * (1.0 + frobenius_norm(pinv));
        CHECK(frob_diff(multiply(multiply(b_v, pinv), b_v), b_v) <= m_tol);
        CHECK(frob_diff(multiply(multiply(pinv, b_v), pinv), pinv) <= p_tol);
    }
}
