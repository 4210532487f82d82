#include "kmeq/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmeq/errors.hpp"
#include "kmeq/kernels.hpp"
#include "kmeq/linalg.hpp"
#include "kmeq/rng.hpp"

namespace kmeq {

const char* termination_name(Termination t) {
    return t == Termination::tolerance_reached ? "tolerance_reached" : "max_iters_exceeded";
}

namespace {

void validate_config(const SolveConfig& cfg) {
    if (cfg.max_iters < 1) throw std::invalid_argument("SolveConfig: max_iters must be >= 1");
    if (!(cfg.rse_tol > 0.0)) throw std::invalid_argument("SolveConfig: rse_tol must be > 0");
    if (cfg.trace_stride < 1) throw std::invalid_argument("SolveConfig: trace_stride must be >= 1");
}

void validate_problem(const ProblemInstance& pb) {
    if (pb.f.rows() != pb.a.rows() || pb.f.cols() != pb.b.cols())
        throw std::invalid_argument("problem: F must be rows(A) x cols(B)");
    if (pb.x_star &&
        (pb.x_star->rows() != pb.a.cols() || pb.x_star->cols() != pb.b.rows()))
        throw std::invalid_argument("problem: x_star must be cols(A) x rows(B)");
}

struct ReferenceInfo {
    DenseMatrix x_star;
    double norm = 0.0;
    bool absolute = false;  // zero reference: report absolute errors
};

ReferenceInfo resolve_reference(const ProblemInstance& pb, const SolveConfig& cfg) {
    ReferenceInfo ref;
    if (cfg.reference_solution)
        ref.x_star = *cfg.reference_solution;
    else if (pb.x_star)
        ref.x_star = *pb.x_star;
    else
        ref.x_star = multiply(multiply(pseudoinverse(pb.a), pb.f), pseudoinverse(pb.b));
    if (ref.x_star.rows() != pb.a.cols() || ref.x_star.cols() != pb.b.rows())
        throw std::invalid_argument("reference solution must be cols(A) x rows(B)");
    ref.norm = frobenius_norm(ref.x_star);
    ref.absolute = ref.norm == 0.0;
    return ref;
}

double error_metric(const DenseMatrix& x, const ReferenceInfo& ref) {
    const double err = std::sqrt(
        kernels::active().sq_diff_sum(x.data(), ref.x_star.data(), x.size()));
    return ref.absolute ? err : err / ref.norm;
}

DenseMatrix initial_x_matrix(const ProblemInstance& pb, const SolveConfig& cfg) {
    if (cfg.initial_x) {
        if (cfg.initial_x->rows() != pb.a.cols() || cfg.initial_x->cols() != pb.b.rows())
            throw std::invalid_argument("initial_x must be cols(A) x rows(B)");
        return *cfg.initial_x;
    }
    return DenseMatrix(pb.a.cols(), pb.b.rows());
}

SolverState make_initial_state(const ProblemInstance& pb, const SolveConfig& cfg) {
    SolverState st;
    st.x = initial_x_matrix(pb, cfg);
    st.y = multiply(st.x, pb.b);
    return st;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Cumulative weights for inversion sampling. Equal weights reproduce the
// uniform draw's index sequence exactly under the same stream.
struct WeightedDraw {
    std::vector<double> cum;

    explicit WeightedDraw(const std::vector<double>& weights) {
        cum.reserve(weights.size());
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("negative sampling weight");
            total += w;
            cum.push_back(total);
        }
        if (!(total > 0.0))
            throw std::domain_error("all sampling weights are zero");
    }

    std::size_t operator()(Rng& rng) const {
        const double u = rng.uniform() * cum.back();
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const std::size_t idx = static_cast<std::size_t>(it - cum.begin());
        return std::min(idx, cum.size() - 1);
    }
};

std::size_t uniform_draw(Rng& rng, std::size_t count) {
    const std::size_t idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(count));
    return std::min(idx, count - 1);
}

// Step bodies shared by the public one-shot helpers and the solve loops; the
// loops pass a reused scratch buffer so the hot path never allocates.
void arbk_y_step_buf(SolverState& state, const DenseMatrix& f,
                     const std::vector<std::size_t>& block, const DenseMatrix& a_block,
                     const DenseMatrix& a_pinv, std::vector<double>& residual) {
    const auto& ops = kernels::active();
    const std::size_t bs = block.size();
    const std::size_t q = f.cols();
    // residual = F_U - A_U Y
    for (std::size_t i = 0; i < bs; ++i)
        std::copy(f.row(block[i]), f.row(block[i]) + q, residual.data() + i * q);
    ops.gemm(bs, q, state.y.rows(), -1.0, a_block.data(), a_block.cols(),
             state.y.data(), q, 1.0, residual.data(), q);
    // Y += pinv(A_U) residual
    ops.gemm(state.y.rows(), q, bs, 1.0, a_pinv.data(), a_pinv.cols(),
             residual.data(), q, 1.0, state.y.data(), q);
}

void arbk_x_step_buf(SolverState& state, const std::vector<std::size_t>& block,
                     const DenseMatrix& b_block, const DenseMatrix& b_pinv,
                     std::vector<double>& gap) {
    const auto& ops = kernels::active();
    const std::size_t bs = block.size();
    const std::size_t rows = state.y.rows();
    // gap = Y_{:,V} - X B_{:,V}
    for (std::size_t i = 0; i < rows; ++i) {
        const double* src = state.y.row(i);
        double* dst = gap.data() + i * bs;
        for (std::size_t j = 0; j < bs; ++j) dst[j] = src[block[j]];
    }
    ops.gemm(rows, bs, state.x.cols(), -1.0, state.x.data(), state.x.cols(),
             b_block.data(), b_block.cols(), 1.0, gap.data(), bs);
    // X += gap pinv(B_{:,V})
    ops.gemm(rows, state.x.cols(), bs, 1.0, gap.data(), bs, b_pinv.data(),
             b_pinv.cols(), 1.0, state.x.data(), state.x.cols());
}

template <typename DrawY, typename DrawX>
SolveReport run_block_loop(const ProblemInstance& pb, const Partition& s,
                           const Partition& t, const BlockCache& cache,
                           const SolveConfig& cfg, DrawY&& draw_y, DrawX&& draw_x) {
    validate_config(cfg);
    validate_problem(pb);
    if (s.universe_size != pb.a.rows())
        throw std::invalid_argument("row partition does not match rows(A)");
    if (t.universe_size != pb.b.cols())
        throw std::invalid_argument("column partition does not match cols(B)");
    if (cache.a_blocks.size() != s.blocks.size() || cache.b_blocks.size() != t.blocks.size())
        throw std::invalid_argument("block cache does not match the partitions");

    ReferenceInfo ref = resolve_reference(pb, cfg);
    SolverState st = make_initial_state(pb, cfg);

    std::size_t max_rows = 0, max_cols = 0;
    for (const auto& blk : s.blocks) max_rows = std::max(max_rows, blk.size());
    for (const auto& blk : t.blocks) max_cols = std::max(max_cols, blk.size());
    std::vector<double> ws_residual(max_rows * pb.f.cols());
    std::vector<double> ws_gap(st.y.rows() * max_cols);

    SolveReport rep;
    rep.absolute_error = ref.absolute;
    const auto start = std::chrono::steady_clock::now();
    double err = error_metric(st.x, ref);
    rep.trace.push_back({0, err});
    Termination term = Termination::max_iters_exceeded;
    std::size_t done = 0;
    if (err <= cfg.rse_tol) {
        term = Termination::tolerance_reached;
    } else {
        for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
            const std::size_t yi = draw_y();
            arbk_y_step_buf(st, pb.f, s.blocks[yi], cache.a_blocks[yi],
                            cache.a_pinvs[yi], ws_residual);
            const std::size_t xi = draw_x();
            arbk_x_step_buf(st, t.blocks[xi], cache.b_blocks[xi], cache.b_pinvs[xi],
                            ws_gap);
            st.iteration = it;
            done = it;
            err = error_metric(st.x, ref);
            const bool hit = err <= cfg.rse_tol;
            if (hit || it % cfg.trace_stride == 0 || it == cfg.max_iters)
                rep.trace.push_back({it, err});
            if (hit) {
                term = Termination::tolerance_reached;
                break;
            }
        }
    }
    rep.elapsed_seconds = seconds_since(start);
    rep.iterations = done;
    rep.termination = term;
    rep.final_x = std::move(st.x);
    return rep;
}

std::vector<double> block_sq_norms(const std::vector<DenseMatrix>& blocks) {
    std::vector<double> w;
    w.reserve(blocks.size());
    for (const auto& b : blocks)
        w.push_back(kernels::active().sum_sq(b.data(), b.size()));
    return w;
}

}  // namespace

BlockCache build_block_cache(const DenseMatrix& a, const Partition& s,
                             const DenseMatrix& b, const Partition& t) {
    validate_partition(s);
    validate_partition(t);
    if (s.universe_size != a.rows())
        throw std::invalid_argument("build_block_cache: row partition universe != rows(A)");
    if (t.universe_size != b.cols())
        throw std::invalid_argument("build_block_cache: column partition universe != cols(B)");
    BlockCache cache;
    cache.a_blocks.reserve(s.blocks.size());
    cache.a_pinvs.reserve(s.blocks.size());
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        DenseMatrix block = take_rows(a, s.blocks[i]);
        try {
            cache.a_pinvs.push_back(pseudoinverse(block));
        } catch (const numerical_error& e) {
            throw numerical_error("row block " + std::to_string(i) + ": " + e.what());
        }
        cache.a_blocks.push_back(std::move(block));
    }
    cache.b_blocks.reserve(t.blocks.size());
    cache.b_pinvs.reserve(t.blocks.size());
    for (std::size_t j = 0; j < t.blocks.size(); ++j) {
        DenseMatrix block = take_cols(b, t.blocks[j]);
        try {
            cache.b_pinvs.push_back(pseudoinverse(block));
        } catch (const numerical_error& e) {
            throw numerical_error("column block " + std::to_string(j) + ": " + e.what());
        }
        cache.b_blocks.push_back(std::move(block));
    }
    return cache;
}

void arbk_y_step(SolverState& state, const DenseMatrix& a, const DenseMatrix& f,
                 const Partition& s, std::size_t block_index, const BlockCache& cache) {
    (void)a;
    const auto& block = s.blocks.at(block_index);
    std::vector<double> residual(block.size() * f.cols());
    arbk_y_step_buf(state, f, block, cache.a_blocks.at(block_index),
                    cache.a_pinvs.at(block_index), residual);
}

void arbk_x_step(SolverState& state, const DenseMatrix& b, const Partition& t,
                 std::size_t block_index, const BlockCache& cache) {
    (void)b;
    const auto& block = t.blocks.at(block_index);
    std::vector<double> gap(state.y.rows() * block.size());
    arbk_x_step_buf(state, block, cache.b_blocks.at(block_index),
                    cache.b_pinvs.at(block_index), gap);
}

DenseMatrix pg_iterate_y(const DenseMatrix& y, const DenseMatrix& a,
                         const DenseMatrix& f, const DenseMatrix& w1,
                         const DenseMatrix& z1) {
    DenseMatrix residual = f;
    multiply_into(residual, a, y, -1.0, 1.0);
    DenseMatrix w1t = transpose(w1);
    DenseMatrix core = multiply(w1t, multiply(a, z1));
    DenseMatrix step = multiply(z1, multiply(pseudoinverse(core), multiply(w1t, residual)));
    DenseMatrix out = y;
    kernels::active().axpy(1.0, step.data(), out.data(), out.size());
    return out;
}

DenseMatrix pg_iterate_x(const DenseMatrix& x, const DenseMatrix& b,
                         const DenseMatrix& y, const DenseMatrix& w2,
                         const DenseMatrix& z2) {
    DenseMatrix residual = y;
    multiply_into(residual, x, b, -1.0, 1.0);
    DenseMatrix w2t = transpose(w2);
    DenseMatrix core = multiply(z2, multiply(b, w2t));
    DenseMatrix step = multiply(multiply(multiply(residual, w2t), pseudoinverse(core)), z2);
    DenseMatrix out = x;
    kernels::active().axpy(1.0, step.data(), out.data(), out.size());
    return out;
}

SolveReport solve_arbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const BlockCache& cache,
                       const SolveConfig& config) {
    Rng rng(config.seed);
    const std::size_t ns = s.blocks.size();
    const std::size_t nt = t.blocks.size();
    return run_block_loop(problem, s, t, cache, config,
                          [&rng, ns] { return uniform_draw(rng, ns); },
                          [&rng, nt] { return uniform_draw(rng, nt); });
}

SolveReport solve_arbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const SolveConfig& config) {
    BlockCache cache = build_block_cache(problem.a, s, problem.b, t);
    return solve_arbk(problem, s, t, cache, config);
}

SolveReport solve_grbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const BlockCache& cache,
                       const SolveConfig& config) {
    validate_config(config);
    validate_problem(problem);
    if (s.universe_size != problem.a.rows())
        throw std::invalid_argument("row partition does not match rows(A)");
    if (t.universe_size != problem.b.cols())
        throw std::invalid_argument("column partition does not match cols(B)");
    if (cache.a_blocks.size() != s.blocks.size() || cache.b_blocks.size() != t.blocks.size())
        throw std::invalid_argument("block cache does not match the partitions");

    Rng rng(config.seed);
    WeightedDraw draw_row(block_sq_norms(cache.a_blocks));
    WeightedDraw draw_col(block_sq_norms(cache.b_blocks));

    // F carved into (row block) x (column block) tiles once up front
    std::vector<std::vector<DenseMatrix>> f_tiles(s.blocks.size());
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        const DenseMatrix rows = take_rows(problem.f, s.blocks[i]);
        f_tiles[i].reserve(t.blocks.size());
        for (std::size_t j = 0; j < t.blocks.size(); ++j)
            f_tiles[i].push_back(take_cols(rows, t.blocks[j]));
    }

    ReferenceInfo ref = resolve_reference(problem, config);
    SolveReport rep;
    rep.absolute_error = ref.absolute;
    const auto start = std::chrono::steady_clock::now();
    DenseMatrix x = initial_x_matrix(problem, config);

    const auto& ops = kernels::active();
    std::size_t max_br = 0, max_bc = 0;
    for (const auto& blk : cache.a_blocks) max_br = std::max(max_br, blk.rows());
    for (const auto& blk : cache.b_blocks) max_bc = std::max(max_bc, blk.cols());
    std::vector<double> ax(max_br * x.cols());
    std::vector<double> residual(max_br * max_bc);
    std::vector<double> lift(x.rows() * max_bc);

    double err = error_metric(x, ref);
    rep.trace.push_back({0, err});
    Termination term = Termination::max_iters_exceeded;
    std::size_t done = 0;
    if (err <= config.rse_tol) {
        term = Termination::tolerance_reached;
    } else {
        for (std::size_t it = 1; it <= config.max_iters; ++it) {
            const std::size_t ui = draw_row(rng);
            const std::size_t vi = draw_col(rng);
            const DenseMatrix& a_block = cache.a_blocks[ui];
            const DenseMatrix& b_block = cache.b_blocks[vi];
            const DenseMatrix& f_tile = f_tiles[ui][vi];
            const std::size_t br = a_block.rows();
            const std::size_t bc = b_block.cols();
            // residual = F_{U,V} - A_U X B_V
            ops.gemm(br, x.cols(), x.rows(), 1.0, a_block.data(), a_block.cols(),
                     x.data(), x.cols(), 0.0, ax.data(), x.cols());
            std::copy(f_tile.data(), f_tile.data() + br * bc, residual.data());
            ops.gemm(br, bc, x.cols(), -1.0, ax.data(), x.cols(), b_block.data(),
                     b_block.cols(), 1.0, residual.data(), bc);
            // X += pinv(A_U) residual pinv(B_V)
            ops.gemm(x.rows(), bc, br, 1.0, cache.a_pinvs[ui].data(), br,
                     residual.data(), bc, 0.0, lift.data(), bc);
            ops.gemm(x.rows(), x.cols(), bc, 1.0, lift.data(), bc,
                     cache.b_pinvs[vi].data(), x.cols(), 1.0, x.data(), x.cols());
            done = it;
            err = error_metric(x, ref);
            const bool hit = err <= config.rse_tol;
            if (hit || it % config.trace_stride == 0 || it == config.max_iters)
                rep.trace.push_back({it, err});
            if (hit) {
                term = Termination::tolerance_reached;
                break;
            }
        }
    }
    rep.elapsed_seconds = seconds_since(start);
    rep.iterations = done;
    rep.termination = term;
    rep.final_x = std::move(x);
    return rep;
}

SolveReport solve_grbk(const ProblemInstance& problem, const Partition& s,
                       const Partition& t, const SolveConfig& config) {
    BlockCache cache = build_block_cache(problem.a, s, problem.b, t);
    return solve_grbk(problem, s, t, cache, config);
}

SolveReport solve_cme_rk(const ProblemInstance& problem, const SolveConfig& config) {
    validate_config(config);
    validate_problem(problem);
    const auto& ops = kernels::active();
    const DenseMatrix& a = problem.a;
    const DenseMatrix& b = problem.b;
    const DenseMatrix& f = problem.f;
    const std::size_t n = a.cols();
    const std::size_t p = b.rows();
    const std::size_t q = b.cols();

    ReferenceInfo ref = resolve_reference(problem, config);
    SolverState st = make_initial_state(problem, config);
    Rng rng(config.seed);

    std::vector<double> row_sq(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) row_sq[i] = ops.sum_sq(a.row(i), n);
    DenseMatrix bt = transpose(b);  // row j = column j of B
    std::vector<double> col_sq(q);
    for (std::size_t j = 0; j < q; ++j) col_sq[j] = ops.sum_sq(bt.row(j), p);
    WeightedDraw draw_row(row_sq);
    WeightedDraw draw_col(col_sq);

    std::vector<double> residual_row(q);
    std::vector<double> gap_col(n);

    SolveReport rep;
    rep.absolute_error = ref.absolute;
    const auto start = std::chrono::steady_clock::now();
    double err = error_metric(st.x, ref);
    rep.trace.push_back({0, err});
    Termination term = Termination::max_iters_exceeded;
    std::size_t done = 0;
    if (err <= config.rse_tol) {
        term = Termination::tolerance_reached;
    } else {
        for (std::size_t it = 1; it <= config.max_iters; ++it) {
            // row step: Y += A_{i,:}^T (F_{i,:} - A_{i,:} Y) / ||A_{i,:}||^2
            const std::size_t i = draw_row(rng);
            const double* arow = a.row(i);
            std::copy(f.row(i), f.row(i) + q, residual_row.data());
            for (std::size_t l = 0; l < n; ++l)
                ops.axpy(-arow[l], st.y.row(l), residual_row.data(), q);
            const double row_scale = 1.0 / row_sq[i];
            for (std::size_t l = 0; l < n; ++l)
                ops.axpy(arow[l] * row_scale, residual_row.data(), st.y.row(l), q);
            // column step: X += (Y_{:,j} - X B_{:,j}) B_{:,j}^T / ||B_{:,j}||^2
            const std::size_t j = draw_col(rng);
            const double* bcol = bt.row(j);
            for (std::size_t l = 0; l < n; ++l)
                gap_col[l] = st.y(l, j) - ops.dot(st.x.row(l), bcol, p);
            const double col_scale = 1.0 / col_sq[j];
            for (std::size_t l = 0; l < n; ++l)
                ops.axpy(gap_col[l] * col_scale, bcol, st.x.row(l), p);

            st.iteration = it;
            done = it;
            err = error_metric(st.x, ref);
            const bool hit = err <= config.rse_tol;
            if (hit || it % config.trace_stride == 0 || it == config.max_iters)
                rep.trace.push_back({it, err});
            if (hit) {
                term = Termination::tolerance_reached;
                break;
            }
        }
    }
    rep.elapsed_seconds = seconds_since(start);
    rep.iterations = done;
    rep.termination = term;
    rep.final_x = std::move(st.x);
    return rep;
}

namespace {

SolveReport gradient_loop(const ProblemInstance& problem, double step,
                          const SolveConfig& config) {
    validate_config(config);
    validate_problem(problem);
    ReferenceInfo ref = resolve_reference(problem, config);
    SolverState st = make_initial_state(problem, config);
    const DenseMatrix at = transpose(problem.a);
    const DenseMatrix bt = transpose(problem.b);

    DenseMatrix xb(st.x.rows(), problem.b.cols());
    DenseMatrix residual(problem.a.rows(), problem.b.cols());
    DenseMatrix atr(st.x.rows(), problem.b.cols());
    DenseMatrix grad(st.x.rows(), st.x.cols());

    SolveReport rep;
    rep.absolute_error = ref.absolute;
    const auto start = std::chrono::steady_clock::now();
    double err = error_metric(st.x, ref);
    rep.trace.push_back({0, err});
    Termination term = Termination::max_iters_exceeded;
    std::size_t done = 0;
    if (err <= config.rse_tol) {
        term = Termination::tolerance_reached;
    } else {
        for (std::size_t it = 1; it <= config.max_iters; ++it) {
            multiply_into(xb, st.x, problem.b);
            residual = problem.f;
            multiply_into(residual, problem.a, xb, -1.0, 1.0);
            multiply_into(atr, at, residual);
            multiply_into(grad, atr, bt);
            kernels::active().axpy(step, grad.data(), st.x.data(), st.x.size());

            st.iteration = it;
            done = it;
            err = error_metric(st.x, ref);
            const bool hit = err <= config.rse_tol;
            if (hit || it % config.trace_stride == 0 || it == config.max_iters)
                rep.trace.push_back({it, err});
            if (hit) {
                term = Termination::tolerance_reached;
                break;
            }
        }
    }
    rep.elapsed_seconds = seconds_since(start);
    rep.iterations = done;
    rep.termination = term;
    rep.final_x = std::move(st.x);
    return rep;
}

double gradient_step_limit(const ProblemInstance& problem) {
    const double smax_a = extreme_singular_values(problem.a).second;
    const double smax_b = extreme_singular_values(problem.b).second;
    return 2.0 / (smax_a * smax_a * smax_b * smax_b);
}

}  // namespace

SolveReport solve_gradient(const ProblemInstance& problem, double step_size,
                           const SolveConfig& config) {
    const double limit = gradient_step_limit(problem);
    if (!(step_size > 0.0) || step_size >= limit)
        throw std::invalid_argument("gradient step " + std::to_string(step_size) +
                                    " outside the convergent range (0, " +
                                    std::to_string(limit) + ")");
    return gradient_loop(problem, step_size, config);
}

SolveReport solve_gradient(const ProblemInstance& problem, const SolveConfig& config) {
    return gradient_loop(problem, gradient_step_limit(problem) / 2.0, config);
}

}  // namespace kmeq
