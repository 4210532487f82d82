#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "kmeq/dense_matrix.hpp"
#include "kmeq/partition.hpp"

namespace kmeq {

// Per-iteration contraction factors. gamma_hat drives the Y iteration,
// gamma_tilde the X iteration; rho1/rho2 are the row/column Kaczmarz
// factors; grbk_factor is the norm-weighted block variant's factor.
struct ConvergenceFactors {
    double gamma_hat = 0.0;
    double gamma_tilde = 0.0;
    double rho1 = 0.0;
    double rho2 = 0.0;
    double grbk_factor = 0.0;
};

// 1 - sigma_min^2(A) / (s * beta_a); throws std::domain_error if the result
// falls outside [0, 1), which means beta_a is inconsistent with A.
double arbk_y_factor(const DenseMatrix& a, std::size_t s, double beta_a);

// 1 - sigma_min^2(B) / (t * beta_b), same contract as arbk_y_factor.
double arbk_x_factor(const DenseMatrix& b, std::size_t t, double beta_b);

// Expected squared X-error bound after k+1 outer iterations:
//   (gamma_tilde^(k+1) + (sigma_max^2(B)/(t alpha_b)) *
//     sum_{l=0..k} gamma_hat^(l+1) gamma_tilde^(k-l)) * x0_err_sq,
// the expanded form of gammabar_k * gamma_tilde^(k+1) * x0_err_sq, which
// stays finite in the gamma_tilde -> 0 limit. Compensated summation keeps
// the long near-unit-ratio sums exact.
double arbk_x_error_bound(std::size_t k, const DenseMatrix& a,
                          const DenseMatrix& b, const PavingBounds& s_info,
                          const PavingBounds& t_info, double x0_err_sq);

// Bound values for every k in ks, sharing one pass of the series.
std::vector<double> arbk_x_error_bound_curve(const std::vector<std::size_t>& ks,
                                             const DenseMatrix& a,
                                             const DenseMatrix& b,
                                             const PavingBounds& s_info,
                                             const PavingBounds& t_info,
                                             double x0_err_sq);

// (1 - sigma_min^2(A)/||A||_F^2, 1 - sigma_min^2(B)/||B||_F^2)
std::pair<double, double> cme_rk_factors(const DenseMatrix& a, const DenseMatrix& b);

// 1 - [sigma_min^2(A) / (||A||_F^2 beta_max^2(A))] *
//     [sigma_min^2(B) / (||B||_F^2 beta_max^2(B))]
// with beta_max(A) = max over row blocks of sigma_max(A_U)/||A_U||_F and
// beta_max(B) the column-block analogue.
double grbk_factor(const DenseMatrix& a, const DenseMatrix& b,
                   const Partition& s, const Partition& t);

// All five factors for one configuration, using measured paving bounds.
ConvergenceFactors convergence_factors(const DenseMatrix& a, const DenseMatrix& b,
                                       const Partition& s, const Partition& t);

}  // namespace kmeq
