#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kmeq/problems.hpp"
#include "kmeq/solvers.hpp"

namespace kmeq {

// Method names: "arbk", "grbk" (block methods, tau_a/tau_b are target block
// sizes), "cme_rk", "gradient" (tau fields unused).
struct MethodSpec {
    std::string name;
    std::size_t tau_a = 0;
    std::size_t tau_b = 0;
};

struct ExperimentConfig {
    Family family = Family::gaussian;
    std::size_t m = 0, n = 0, p = 0, q = 0;
    // smatrix family
    std::size_t rank_a = 0, rank_b = 0;
    double sigma_a1 = 0.0, sigma_a2 = 0.0, sigma_b1 = 0.0, sigma_b2 = 0.0;
    // bspline family
    Surface surface = Surface::surface1;

    std::vector<MethodSpec> methods;
    std::size_t trials = 20;
    double rse_tol = 5e-2;
    std::size_t max_iters = 100000;
    std::uint64_t base_seed = 0;
    std::size_t trace_stride = 1;
    // keep one instance across trials instead of redrawing per trial
    bool fix_instance = false;
    std::string output_dir;  // empty: $KMEQ_OUT, then "."
    std::size_t workers = 0;  // 0: hardware concurrency
};

struct MethodSummary {
    MethodSpec method;
    std::size_t trials = 0;
    double mean_rse = 0.0;
    double median_rse = 0.0;
    double mean_it = 0.0;
    double median_it = 0.0;
    double mean_cpu_s = 0.0;
    std::size_t failures = 0;  // runs that hit max_iters
};

struct ExperimentSummary {
    std::vector<MethodSummary> methods;
    std::vector<std::string> warnings;
};

// target block size tau -> nearest block count, clamped to [1, dim]
std::size_t block_count_for_size(std::size_t dim, std::size_t tau);

// Instance described by the config's family fields, drawn with this seed
// (the fitting family ignores the seed).
ProblemInstance experiment_instance(const ExperimentConfig& config, std::uint64_t seed);

// Runs trials x methods; trial i uses seed base_seed + i for instance
// generation and solver streams, methods sharing a trial see the identical
// instance (and identical partitions when their block sizes agree). Writes
// summary.csv, runs.jsonl and per-run trace CSVs into the output dir.
// Trials may execute in parallel; all outputs are deterministic except
// elapsed times.
ExperimentSummary run_experiment(const ExperimentConfig& config);

void write_summary_csv(std::ostream& out, const ExperimentSummary& summary);

// Rendered comparison table; non-converged medians print with the ">"
// convention (e.g. ">100000").
void write_summary_table(std::ostream& out, const ExperimentSummary& summary,
                         std::size_t max_iters);

struct BoundOverlayPoint {
    std::size_t k = 0;
    double empirical = 0.0;  // mean squared X-error over runs at iteration k
    double bound = 0.0;      // theoretical expectation bound at iteration k
};

struct BoundOverlay {
    std::vector<BoundOverlayPoint> points;
    std::vector<std::string> warnings;
    bool bound_available = true;
};

// Single-method expectation check: fixes one instance and partition pair,
// reruns the solver config.trials times with distinct streams, and pairs
// the mean squared error at each recorded iteration with the closed-form
// bound. Guard: refuses m or q beyond 2000 (dense SVD cost); sigma_min
// failures degrade to empirical-only output with a warning.
BoundOverlay compare_with_bounds(const ExperimentConfig& config);

void write_bound_overlay_csv(std::ostream& out, const BoundOverlay& overlay);

// Subcommands: generate, solve, bench, bounds, surfaces. Returns 0 on
// success, 1 on IO failure, 2 on usage errors.
int cli_main(int argc, const char* const* argv);

}  // namespace kmeq
