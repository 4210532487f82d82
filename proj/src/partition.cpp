#include "kmeq/partition.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "kmeq/linalg.hpp"

namespace kmeq {

void validate_partition(const Partition& p) {
    if (p.universe_size == 0)
        throw std::invalid_argument("partition: empty universe");
    if (p.blocks.empty())
        throw std::invalid_argument("partition: no blocks");
    std::vector<char> seen(p.universe_size, 0);
    std::size_t covered = 0;
    for (const auto& block : p.blocks) {
        if (block.empty()) throw std::invalid_argument("partition: empty block");
        for (std::size_t idx : block) {
            if (idx >= p.universe_size)
                throw std::invalid_argument("partition: index " + std::to_string(idx) +
                                            " outside universe of size " +
                                            std::to_string(p.universe_size));
            if (seen[idx])
                throw std::invalid_argument("partition: index " + std::to_string(idx) +
                                            " appears in two blocks");
            seen[idx] = 1;
            ++covered;
        }
    }
    if (covered != p.universe_size)
        throw std::invalid_argument("partition: blocks cover " + std::to_string(covered) +
                                    " of " + std::to_string(p.universe_size) + " indices");
}

namespace {

Partition random_partition(std::size_t m, std::size_t s, Rng& rng, const char* what) {
    if (s == 0 || s > m)
        throw std::invalid_argument(std::string(what) + ": need 1 <= blocks <= " +
                                    std::to_string(m) + ", got " + std::to_string(s));
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates over the seeded stream
    for (std::size_t i = m; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
    Partition p;
    p.universe_size = m;
    p.blocks.reserve(s);
    for (std::size_t i = 1; i <= s; ++i) {
        const std::size_t lo = (i - 1) * m / s;
        const std::size_t hi = i * m / s;
        std::vector<std::size_t> block(perm.begin() + lo, perm.begin() + hi);
        std::sort(block.begin(), block.end());
        p.blocks.push_back(std::move(block));
    }
    return p;
}

struct BlockSpectrum {
    double lambda_min_nonzero;  // smallest nonzero eigenvalue of the Gram matrix
    double lambda_max;
    bool deficient;  // Gram matrix singular
};

// Eigenvalues of M_U M_U^T (or M_V^T M_V) are the squared singular values
// of the block padded with zeros up to the Gram dimension.
BlockSpectrum block_spectrum(const DenseMatrix& block, std::size_t gram_dim) {
    SvdResult r = svd(block);
    const double sigma_max = r.singular_values.front();
    if (sigma_max == 0.0) return {0.0, 0.0, true};
    const double tol = default_rank_tol(block.rows(), block.cols(), sigma_max);
    double smallest = 0.0;
    std::size_t rank = 0;
    for (double s : r.singular_values) {
        if (s > tol) {
            smallest = s;
            ++rank;
        }
    }
    return {smallest * smallest, sigma_max * sigma_max, rank < gram_dim};
}

PavingBounds paving_from_spectra(const std::vector<BlockSpectrum>& spectra) {
    PavingBounds out;
    out.block_count = spectra.size();
    double alpha = 0.0;
    double beta = 0.0;
    bool deficient = false;
    bool first = true;
    for (const auto& sp : spectra) {
        deficient = deficient || sp.deficient;
        beta = std::max(beta, sp.lambda_max);
        if (sp.lambda_min_nonzero > 0.0) {
            alpha = first ? sp.lambda_min_nonzero : std::min(alpha, sp.lambda_min_nonzero);
            first = false;
        }
    }
    if (first)
        throw std::domain_error("paving bounds: all blocks are zero matrices");
    out.alpha = alpha;
    out.beta = beta;
    out.max_cond_sq = beta / alpha;
    out.rank_deficient = deficient;
    return out;
}

}  // namespace

Partition row_random_partition(std::size_t m, std::size_t s, Rng& rng) {
    return random_partition(m, s, rng, "row_random_partition");
}

Partition column_random_partition(std::size_t q, std::size_t t, Rng& rng) {
    return random_partition(q, t, rng, "column_random_partition");
}

PavingBounds row_paving_bounds(const DenseMatrix& a, const Partition& s) {
    validate_partition(s);
    if (s.universe_size != a.rows())
        throw std::invalid_argument("row_paving_bounds: partition universe " +
                                    std::to_string(s.universe_size) + " != rows " +
                                    std::to_string(a.rows()));
    std::vector<BlockSpectrum> spectra;
    spectra.reserve(s.blocks.size());
    for (const auto& block : s.blocks)
        spectra.push_back(block_spectrum(take_rows(a, block), block.size()));
    return paving_from_spectra(spectra);
}

PavingBounds col_paving_bounds(const DenseMatrix& b, const Partition& t) {
    validate_partition(t);
    if (t.universe_size != b.cols())
        throw std::invalid_argument("col_paving_bounds: partition universe " +
                                    std::to_string(t.universe_size) + " != cols " +
                                    std::to_string(b.cols()));
    std::vector<BlockSpectrum> spectra;
    spectra.reserve(t.blocks.size());
    for (const auto& block : t.blocks)
        spectra.push_back(block_spectrum(take_cols(b, block), block.size()));
    return paving_from_spectra(spectra);
}

void write_partition(std::ostream& out, const Partition& p) {
    for (const auto& block : p.blocks) {
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (i) out << ',';
            out << block[i] + 1;
        }
        out << '\n';
    }
}

}  // namespace kmeq
