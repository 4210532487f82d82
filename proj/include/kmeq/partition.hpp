#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "kmeq/dense_matrix.hpp"
#include "kmeq/rng.hpp"

namespace kmeq {

// Disjoint index blocks covering {0, ..., universe_size-1}. Indices are
// 0-based internally and rendered 1-based in dumps.
struct Partition {
    std::size_t universe_size = 0;
    std::vector<std::vector<std::size_t>> blocks;

    std::size_t block_count() const { return blocks.size(); }
};

// throws std::invalid_argument if blocks are not a partition of the universe
void validate_partition(const Partition& p);

// Blocks follow the floor split of a uniform random permutation: block i-1
// (1-based i) takes permuted positions floor((i-1)m/s)+1 .. floor(i*m/s),
// so sizes differ by at most one and earlier blocks can be smaller.
Partition row_random_partition(std::size_t m, std::size_t s, Rng& rng);
Partition column_random_partition(std::size_t q, std::size_t t, Rng& rng);

// Extreme eigenvalues of the per-block Gram matrices (A_U A_U^T row side,
// B_V^T B_V column side), computed as squared extreme singular values of
// each block. If some block's Gram matrix is singular, alpha is the
// smallest nonzero eigenvalue across blocks and rank_deficient is set.
struct PavingBounds {
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t block_count = 0;
    double max_cond_sq = 0.0;
    bool rank_deficient = false;
};

PavingBounds row_paving_bounds(const DenseMatrix& a, const Partition& s);
PavingBounds col_paving_bounds(const DenseMatrix& b, const Partition& t);

// one line per block, comma-separated 1-based indices
void write_partition(std::ostream& out, const Partition& p);

}  // namespace kmeq
