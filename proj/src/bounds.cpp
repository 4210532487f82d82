#include "kmeq/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kmeq/linalg.hpp"

namespace kmeq {
namespace {

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double contraction_factor(const DenseMatrix& m, std::size_t blocks, double beta,
                          const char* what) {
    if (blocks < 1) throw std::invalid_argument(std::string(what) + ": block count must be >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument(std::string(what) + ": beta must be positive");
    const double sigma_min = extreme_singular_values(m).first;
    const double factor =
        1.0 - (sigma_min * sigma_min) / (static_cast<double>(blocks) * beta);
    if (!(factor >= 0.0) || factor >= 1.0)
        throw std::domain_error(std::string(what) + ": factor " + std::to_string(factor) +
                                " outside [0, 1); paving bound inconsistent with the matrix");
    return factor;
}

}  // namespace

double arbk_y_factor(const DenseMatrix& a, std::size_t s, double beta_a) {
    return contraction_factor(a, s, beta_a, "arbk_y_factor");
}

double arbk_x_factor(const DenseMatrix& b, std::size_t t, double beta_b) {
    return contraction_factor(b, t, beta_b, "arbk_x_factor");
}

double arbk_x_error_bound(std::size_t k, const DenseMatrix& a, const DenseMatrix& b,
                          const PavingBounds& s_info, const PavingBounds& t_info,
                          double x0_err_sq) {
    if (!(x0_err_sq >= 0.0))
        throw std::invalid_argument("arbk_x_error_bound: x0_err_sq must be nonnegative");
    if (!(t_info.alpha > 0.0))
        throw std::invalid_argument("arbk_x_error_bound: alpha_b must be positive");
    const double gamma_hat = arbk_y_factor(a, s_info.block_count, s_info.beta);
    const double gamma_tilde = arbk_x_factor(b, t_info.block_count, t_info.beta);
    const double sigma_max_b = extreme_singular_values(b).second;
    const double coeff = sigma_max_b * sigma_max_b /
                         (static_cast<double>(t_info.block_count) * t_info.alpha);
    // Expanded form of gammabar_k * gamma_tilde^(k+1): each series term is
    // gamma_hat^(l+1) * gamma_tilde^(k-l), which stays finite when
    // gamma_tilde = 0 (only the l = k term survives). pow(0, 0) = 1 covers
    // the limit cases exactly.
    KahanSum series;
    for (std::size_t l = 0; l <= k; ++l)
        series.add(std::pow(gamma_hat, static_cast<double>(l + 1)) *
                   std::pow(gamma_tilde, static_cast<double>(k - l)));
    const double tilde_pow = std::pow(gamma_tilde, static_cast<double>(k + 1));
    return (tilde_pow + coeff * series.sum) * x0_err_sq;
}

std::vector<double> arbk_x_error_bound_curve(const std::vector<std::size_t>& ks,
                                             const DenseMatrix& a, const DenseMatrix& b,
                                             const PavingBounds& s_info,
                                             const PavingBounds& t_info,
                                             double x0_err_sq) {
    if (!(x0_err_sq >= 0.0))
        throw std::invalid_argument("arbk_x_error_bound_curve: x0_err_sq must be nonnegative");
    if (!(t_info.alpha > 0.0))
        throw std::invalid_argument("arbk_x_error_bound_curve: alpha_b must be positive");
    const double gamma_hat = arbk_y_factor(a, s_info.block_count, s_info.beta);
    const double gamma_tilde = arbk_x_factor(b, t_info.block_count, t_info.beta);
    const double sigma_max_b = extreme_singular_values(b).second;
    const double coeff = sigma_max_b * sigma_max_b /
                         (static_cast<double>(t_info.block_count) * t_info.alpha);
    const std::size_t k_max = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
    // series_k = sum_{l=0..k} gamma_hat^(l+1) gamma_tilde^(k-l) follows the
    // recurrence series_k = gamma_tilde * series_{k-1} + gamma_hat^(k+1)
    std::vector<double> bounds_by_k(k_max + 1);
    double series = 0.0;
    double hat_pow = 1.0;
    double tilde_pow = 1.0;
    for (std::size_t k = 0; k <= k_max; ++k) {
        hat_pow *= gamma_hat;
        tilde_pow *= gamma_tilde;
        series = gamma_tilde * series + hat_pow;
        bounds_by_k[k] = (tilde_pow + coeff * series) * x0_err_sq;
    }
    std::vector<double> out;
    out.reserve(ks.size());
    for (std::size_t k : ks) out.push_back(bounds_by_k[k]);
    return out;
}

std::pair<double, double> cme_rk_factors(const DenseMatrix& a, const DenseMatrix& b) {
    const double sigma_min_a = extreme_singular_values(a).first;
    const double sigma_min_b = extreme_singular_values(b).first;
    const double fro_a = frobenius_norm(a);
    const double fro_b = frobenius_norm(b);
    return {1.0 - (sigma_min_a * sigma_min_a) / (fro_a * fro_a),
            1.0 - (sigma_min_b * sigma_min_b) / (fro_b * fro_b)};
}

namespace {

double beta_max_ratio(const DenseMatrix& m, const Partition& part, bool rows,
                      const char* side) {
    double best = 0.0;
    for (std::size_t i = 0; i < part.blocks.size(); ++i) {
        DenseMatrix block = rows ? take_rows(m, part.blocks[i]) : take_cols(m, part.blocks[i]);
        const double fro = frobenius_norm(block);
        if (fro == 0.0)
            throw std::domain_error(std::string(side) + " block " + std::to_string(i) +
                                    " is a zero matrix");
        const double sigma_max = extreme_singular_values(block).second;
        best = std::max(best, sigma_max / fro);
    }
    return best;
}

}  // namespace

double grbk_factor(const DenseMatrix& a, const DenseMatrix& b, const Partition& s,
                   const Partition& t) {
    validate_partition(s);
    validate_partition(t);
    if (s.universe_size != a.rows() || t.universe_size != b.cols())
        throw std::invalid_argument("grbk_factor: partitions do not match matrix shapes");
    const double beta_max_a = beta_max_ratio(a, s, true, "row");
    const double beta_max_b = beta_max_ratio(b, t, false, "column");
    const double sigma_min_a = extreme_singular_values(a).first;
    const double sigma_min_b = extreme_singular_values(b).first;
    const double fro_a_sq = frobenius_inner(a, a);
    const double fro_b_sq = frobenius_inner(b, b);
    const double factor = 1.0 - (sigma_min_a * sigma_min_a / (fro_a_sq * beta_max_a * beta_max_a)) *
                                    (sigma_min_b * sigma_min_b / (fro_b_sq * beta_max_b * beta_max_b));
    if (!(factor >= 0.0) || factor >= 1.0)
        throw std::domain_error("grbk_factor: factor outside [0, 1)");
    return factor;
}

ConvergenceFactors convergence_factors(const DenseMatrix& a, const DenseMatrix& b,
                                       const Partition& s, const Partition& t) {
    ConvergenceFactors out;
    const PavingBounds row_bounds = row_paving_bounds(a, s);
    const PavingBounds col_bounds = col_paving_bounds(b, t);
    out.gamma_hat = arbk_y_factor(a, row_bounds.block_count, row_bounds.beta);
    out.gamma_tilde = arbk_x_factor(b, col_bounds.block_count, col_bounds.beta);
    const auto rho = cme_rk_factors(a, b);
    out.rho1 = rho.first;
    out.rho2 = rho.second;
    out.grbk_factor = grbk_factor(a, b, s, t);
    return out;
}

}  // namespace kmeq
