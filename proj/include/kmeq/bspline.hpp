#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kmeq/dense_matrix.hpp"

namespace kmeq {

// Chord-length parameterization of an ordered point sequence (rows of
// `points` are the points, any dimension): t_0 = 0, t_last = 1, increments
// proportional to consecutive chord lengths. Throws std::invalid_argument
// on coincident consecutive points.
std::vector<double> chord_length_params(const DenseMatrix& points);

// Clamped knot vector of length n_ctrl + degree + 1 for fitting with
// n_ctrl control points: degree+1 zeros, degree+1 ones, and n_ctrl-degree-1
// interior knots by parameter averaging. When n_ctrl < params.size()
// (approximation rather than interpolation) the parameter vector is first
// resampled to n_ctrl values by linear interpolation at positions
// i*(params.size()-1)/(n_ctrl-1), i = 0..n_ctrl-1; interior knot j
// (1-based) is then the mean of resampled values j .. j+degree-1. With
// n_ctrl == params.size() the resampling is the identity and this is the
// classical interpolation averaging rule.
std::vector<double> averaging_knots(std::span<const double> params,
                                    std::size_t n_ctrl, std::size_t degree = 3);

// Collocation matrix: entry (i, j) = N_{j,degree}(params[i]) by the
// Cox-de Boor recurrence. Rows are nonnegative, sum to 1 and have at most
// degree+1 nonzeros. Throws std::invalid_argument for parameters outside
// the knot span.
DenseMatrix bspline_collocation(std::span<const double> params,
                                std::span<const double> knots,
                                std::size_t degree = 3);

}  // namespace kmeq
