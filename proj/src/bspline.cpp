#include "kmeq/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kmeq {

std::vector<double> chord_length_params(const DenseMatrix& points) {
    const std::size_t count = points.rows();
    if (count < 2)
        throw std::invalid_argument("chord_length_params: need at least 2 points");
    std::vector<double> chords(count - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < count; ++i) {
        double sq = 0.0;
        for (std::size_t d = 0; d < points.cols(); ++d) {
            const double diff = points(i + 1, d) - points(i, d);
            sq += diff * diff;
        }
        const double len = std::sqrt(sq);
        if (len == 0.0)
            throw std::invalid_argument("chord_length_params: coincident consecutive points at index " +
                                        std::to_string(i));
        chords[i] = len;
        total += len;
    }
    std::vector<double> params(count);
    params.front() = 0.0;
    double run = 0.0;
    for (std::size_t i = 0; i + 1 < count; ++i) {
        run += chords[i];
        params[i + 1] = run / total;
    }
    params.back() = 1.0;
    return params;
}

std::vector<double> averaging_knots(std::span<const double> params,
                                    std::size_t n_ctrl, std::size_t degree) {
    if (degree < 1) throw std::invalid_argument("averaging_knots: degree must be >= 1");
    if (n_ctrl < degree + 1)
        throw std::invalid_argument("averaging_knots: need at least degree+1 control points");
    if (params.size() < 2)
        throw std::invalid_argument("averaging_knots: need at least 2 parameters");
    if (n_ctrl > params.size())
        throw std::invalid_argument("averaging_knots: " + std::to_string(n_ctrl) +
                                    " control points under-determined by " +
                                    std::to_string(params.size()) + " parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i] < 0.0 || params[i] > 1.0)
            throw std::invalid_argument("averaging_knots: parameters must lie in [0, 1]");
        if (i > 0 && params[i] < params[i - 1])
            throw std::invalid_argument("averaging_knots: parameters must be nondecreasing");
    }

    // Resample the parameter vector to n_ctrl pseudo-parameters by linear
    // interpolation at fractional positions i*(len-1)/(n_ctrl-1); with
    // n_ctrl == len this is the identity and the knots below reduce to the
    // classical interpolation averaging rule. The symmetric resampling
    // keeps uniform inputs uniform, so symmetric data yields symmetric
    // knots.
    const std::size_t len = params.size();
    std::vector<double> tau(n_ctrl);
    if (n_ctrl == len) {
        tau.assign(params.begin(), params.end());
    } else {
        for (std::size_t i = 0; i < n_ctrl; ++i) {
            const double pos = static_cast<double>(i) * static_cast<double>(len - 1) /
                               static_cast<double>(n_ctrl - 1);
            const std::size_t lo = std::min(static_cast<std::size_t>(pos), len - 2);
            const double frac = pos - static_cast<double>(lo);
            tau[i] = params[lo] + frac * (params[lo + 1] - params[lo]);
        }
    }

    // interior knot j (1-based) = mean of tau[j .. j+degree-1]
    std::vector<double> knots(n_ctrl + degree + 1);
    for (std::size_t i = 0; i <= degree; ++i) {
        knots[i] = 0.0;
        knots[n_ctrl + i] = 1.0;
    }
    for (std::size_t j = 1; j + degree < n_ctrl; ++j) {
        double acc = 0.0;
        for (std::size_t i = j; i < j + degree; ++i) acc += tau[i];
        knots[degree + j] = acc / static_cast<double>(degree);
    }
    return knots;
}

namespace {

std::size_t find_span(double u, std::span<const double> knots, std::size_t degree,
                      std::size_t n_basis) {
    if (u >= knots[n_basis]) return n_basis - 1;
    if (u <= knots[degree]) return degree;
    std::size_t lo = degree;
    std::size_t hi = n_basis;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (knots[mid] <= u)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

// Cox-de Boor basis triangle for the nonzero functions at span i.
void basis_funs(std::span<const double> knots, std::size_t i, double u,
                std::size_t degree, std::vector<double>& out) {
    std::vector<double> left(degree + 1), right(degree + 1);
    out.assign(degree + 1, 0.0);
    out[0] = 1.0;
    for (std::size_t j = 1; j <= degree; ++j) {
        left[j] = u - knots[i + 1 - j];
        right[j] = knots[i + j] - u;
        double saved = 0.0;
        for (std::size_t r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double temp = denom != 0.0 ? out[r] / denom : 0.0;
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

}  // namespace

DenseMatrix bspline_collocation(std::span<const double> params,
                                std::span<const double> knots,
                                std::size_t degree) {
    if (degree < 1) throw std::invalid_argument("bspline_collocation: degree must be >= 1");
    if (knots.size() < 2 * (degree + 1))
        throw std::invalid_argument("bspline_collocation: knot vector too short");
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (knots[i] < knots[i - 1])
            throw std::invalid_argument("bspline_collocation: knots must be nondecreasing");
    if (params.empty())
        throw std::invalid_argument("bspline_collocation: no parameters");
    const std::size_t n_basis = knots.size() - degree - 1;
    const double lo = knots.front();
    const double hi = knots.back();

    DenseMatrix out(params.size(), n_basis);
    std::vector<double> row;
    for (std::size_t r = 0; r < params.size(); ++r) {
        const double u = params[r];
        if (u < lo || u > hi)
            throw std::invalid_argument("bspline_collocation: parameter " + std::to_string(u) +
                                        " outside knot span [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
        const std::size_t span = find_span(u, knots, degree, n_basis);
        basis_funs(knots, span, u, degree, row);
        for (std::size_t j = 0; j <= degree; ++j)
            out(r, span - degree + j) = row[j];
    }
    return out;
}

}  // namespace kmeq
