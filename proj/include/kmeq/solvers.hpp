#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kmeq/dense_matrix.hpp"
#include "kmeq/partition.hpp"
#include "kmeq/problems.hpp"

namespace kmeq {

// Iterate pair for A X B = F: X is n x p, Y is n x q, coupled by the
// invariant Y = X B at initialization.
struct SolverState {
    DenseMatrix x;
    DenseMatrix y;
    std::size_t iteration = 0;
};

enum class Termination { tolerance_reached, max_iters_exceeded };

const char* termination_name(Termination t);

struct SolveConfig {
    std::size_t max_iters = 100000;
    double rse_tol = 5e-2;
    std::uint64_t seed = 0;
    std::size_t trace_stride = 1;
    // X* override; when absent, x_star from the instance is used, and if
    // that is absent too, X* = pinv(A) F pinv(B) is computed up front.
    const DenseMatrix* reference_solution = nullptr;
    // test hook; default start is the zero matrix
    const DenseMatrix* initial_x = nullptr;
};

struct TracePoint {
    std::size_t iteration;
    double rse;
};

struct SolveReport {
    DenseMatrix final_x;
    std::size_t iterations = 0;
    Termination termination = Termination::max_iters_exceeded;
    double elapsed_seconds = 0.0;
    std::vector<TracePoint> trace;
    // set when ||X*|| = 0: trace entries are absolute errors ||X - X*||_F
    bool absolute_error = false;
};

// Per-block slices and pseudoinverses, computed once per (partition pair,
// matrix pair); iterations are then matrix multiplies only.
struct BlockCache {
    std::vector<DenseMatrix> a_blocks;  // A_{U,:}, one per row block
    std::vector<DenseMatrix> a_pinvs;   // pinv(A_{U,:})
    std::vector<DenseMatrix> b_blocks;  // B_{:,V}, one per column block
    std::vector<DenseMatrix> b_pinvs;   // pinv(B_{:,V})
};

BlockCache build_block_cache(const DenseMatrix& a, const Partition& s,
                             const DenseMatrix& b, const Partition& t);

// Y += pinv(A_U) (F_U - A_U Y) for row block s.blocks[block_index]
void arbk_y_step(SolverState& state, const DenseMatrix& a, const DenseMatrix& f,
                 const Partition& s, std::size_t block_index,
                 const BlockCache& cache);

// X += (Y_{:,V} - X B_{:,V}) pinv(B_{:,V}) for column block t.blocks[block_index]
void arbk_x_step(SolverState& state, const DenseMatrix& b, const Partition& t,
                 std::size_t block_index, const BlockCache& cache);

// One generalized sketch-and-project step:
//   Y + Z1 pinv(W1^T A Z1) W1^T (F - A Y)
//   X + (Y - X B) W2^T pinv(Z2 B W2^T) Z2
// Choosing W1 = columns of I at U and Z1 = A_U^T reproduces arbk_y_step;
// the analogous choice on the B side reproduces arbk_x_step.
DenseMatrix pg_iterate_y(const DenseMatrix& y, const DenseMatrix& a,
                         const DenseMatrix& f, const DenseMatrix& w1,
                         const DenseMatrix& z1);
DenseMatrix pg_iterate_x(const DenseMatrix& x, const DenseMatrix& b,
                         const DenseMatrix& y, const DenseMatrix& w2,
                         const DenseMatrix& z2);

// Alternating randomized block Kaczmarz: per outer iteration draw a row
// block uniformly and apply the Y step, then a column block uniformly and
// apply the X step. Deterministic given config.seed.
SolveReport solve_arbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const BlockCache& cache,
                       const SolveConfig& config);
SolveReport solve_arbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const SolveConfig& config);

// Global randomized block Kaczmarz baseline: one coupled two-sided
// projection per iteration, X += pinv(A_U) (F_{U,V} - A_U X B_V) pinv(B_V),
// with U and V drawn with Frobenius-norm-squared probabilities (U first,
// then V, on one stream). No Y iterate.
SolveReport solve_grbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const BlockCache& cache,
                       const SolveConfig& config);
SolveReport solve_grbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const SolveConfig& config);

// Row/column Kaczmarz with squared-norm sampling; rows of A and columns of
// B with zero norm get probability zero.
SolveReport solve_cme_rk(const ProblemInstance& problem, const SolveConfig& config);

// X += step * A^T (F - A X B) B^T. Steps outside the convergent range
// (0, 2/(sigma_max^2(A) sigma_max^2(B))) raise std::invalid_argument; the
// overload without a step uses the safe default 1/(sigma_max^2 sigma_max^2).
SolveReport solve_gradient(const ProblemInstance& problem, double step_size,
                           const SolveConfig& config);
SolveReport solve_gradient(const ProblemInstance& problem, const SolveConfig& config);

}  // namespace kmeq
