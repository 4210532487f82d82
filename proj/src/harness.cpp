#include "kmeq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "kmeq/bounds.hpp"
#include "kmeq/linalg.hpp"
#include "kmeq/matrix_io.hpp"
#include "kmeq/rng.hpp"

namespace kmeq {

namespace {

constexpr std::uint64_t k_partition_tag = 0x70617274;  // block-drawing streams
constexpr std::uint64_t k_solver_tag = 0x736f6c76;     // per-run solver streams
constexpr std::uint64_t k_matrix_a_tag = 0x61;
constexpr std::uint64_t k_matrix_b_tag = 0x62;

bool is_block_method(const std::string& name) {
    return name == "arbk" || name == "grbk";
}

bool known_method(const std::string& name) {
    return is_block_method(name) || name == "cme_rk" || name == "gradient";
}

void validate_experiment_config(const ExperimentConfig& config) {
    if (config.m == 0 || config.n == 0 || config.p == 0 || config.q == 0)
        throw std::invalid_argument("experiment: all of m, n, p, q must be positive");
    if (config.methods.empty())
        throw std::invalid_argument("experiment: at least one method is required");
    if (config.trials == 0) throw std::invalid_argument("experiment: trials must be positive");
    if (config.max_iters == 0)
        throw std::invalid_argument("experiment: max_iters must be positive");
    if (!(config.rse_tol > 0.0))
        throw std::invalid_argument("experiment: rse_tol must be positive");
    if (config.trace_stride == 0)
        throw std::invalid_argument("experiment: trace_stride must be positive");
    for (const auto& spec : config.methods) {
        if (!known_method(spec.name))
            throw std::invalid_argument("experiment: unknown method \"" + spec.name + "\"");
        if (is_block_method(spec.name)) {
            if (spec.tau_a == 0 || spec.tau_b == 0)
                throw std::invalid_argument("experiment: " + spec.name +
                                            " needs positive block sizes tau_a, tau_b");
            if (spec.tau_a > config.m)
                throw std::invalid_argument("experiment: tau_a=" + std::to_string(spec.tau_a) +
                                            " exceeds the row count m=" + std::to_string(config.m));
            if (spec.tau_b > config.q)
                throw std::invalid_argument("experiment: tau_b=" + std::to_string(spec.tau_b) +
                                            " exceeds the column count q=" + std::to_string(config.q));
        }
    }
}

}  // namespace

std::size_t block_count_for_size(std::size_t dim, std::size_t tau) {
    const long long s = std::llround(static_cast<double>(dim) / static_cast<double>(tau));
    if (s < 1) return 1;
    if (s > static_cast<long long>(dim)) return dim;
    return static_cast<std::size_t>(s);
}

ProblemInstance experiment_instance(const ExperimentConfig& config, std::uint64_t seed) {
    switch (config.family) {
        case Family::gaussian:
            return gen_gaussian(config.m, config.n, config.p, config.q, seed);
        case Family::smatrix: {
            DenseMatrix a = gen_smatrix(config.m, config.n, config.rank_a, config.sigma_a1,
                                        config.sigma_a2, mix_seed(seed, k_matrix_a_tag));
            DenseMatrix b = gen_smatrix(config.p, config.q, config.rank_b, config.sigma_b1,
                                        config.sigma_b2, mix_seed(seed, k_matrix_b_tag));
            ProblemInstance instance = make_consistent_instance(std::move(a), std::move(b));
            instance.provenance.family = Family::smatrix;
            std::ostringstream params;
            params << "a=(" << config.m << 'x' << config.n << ",r=" << config.rank_a << ",sigma=["
                   << config.sigma_a2 << ',' << config.sigma_a1 << "]) b=(" << config.p << 'x'
                   << config.q << ",r=" << config.rank_b << ",sigma=[" << config.sigma_b2 << ','
                   << config.sigma_b1 << "])";
            instance.provenance.parameters = params.str();
            instance.provenance.seed = seed;
            return instance;
        }
        case Family::bspline:
            return build_fitting_problem(config.surface, config.m, config.q, config.n, config.p);
    }
    throw std::invalid_argument("experiment: unknown family");
}

namespace {

std::string method_id(const MethodSpec& spec) {
    if (!is_block_method(spec.name)) return spec.name;
    return spec.name + "_" + std::to_string(spec.tau_a) + "x" + std::to_string(spec.tau_b);
}

struct BlockSetup {
    Partition row;
    Partition col;
    BlockCache cache;
};

struct RunResult {
    RunRecord record;
    std::vector<TracePoint> trace;
    bool absolute_error = false;
    std::string error;  // nonempty when the solver aborted
};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string resolve_output_dir(const ExperimentConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv("KMEQ_OUT"); env != nullptr && *env != '\0') return env;
    return ".";
}

// Methods with equal block sizes reuse one partition pair and cache per
// trial, so their iteration counts are comparable run for run.
std::map<std::pair<std::size_t, std::size_t>, BlockSetup> build_setups(
    const ExperimentConfig& config, const ProblemInstance& instance, std::uint64_t trial_seed) {
    std::map<std::pair<std::size_t, std::size_t>, BlockSetup> setups;
    for (const auto& spec : config.methods) {
        if (!is_block_method(spec.name)) continue;
        const auto key = std::make_pair(spec.tau_a, spec.tau_b);
        if (setups.count(key)) continue;
        Rng prng(mix_seed(mix_seed(trial_seed, k_partition_tag),
                          spec.tau_a * 0x10001 + spec.tau_b));
        BlockSetup setup;
        setup.row = row_random_partition(instance.a.rows(),
                                         block_count_for_size(instance.a.rows(), spec.tau_a), prng);
        setup.col = column_random_partition(instance.b.cols(),
                                            block_count_for_size(instance.b.cols(), spec.tau_b), prng);
        setup.cache = build_block_cache(instance.a, setup.row, instance.b, setup.col);
        setups.emplace(key, std::move(setup));
    }
    return setups;
}

std::vector<RunResult> run_trial(const ExperimentConfig& config, std::size_t trial,
                                 const ProblemInstance& instance) {
    const std::uint64_t trial_seed = config.base_seed + trial;
    const auto setups = build_setups(config, instance, trial_seed);
    std::vector<RunResult> results;
    results.reserve(config.methods.size());
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const auto& spec = config.methods[mi];
        SolveConfig sc;
        sc.max_iters = config.max_iters;
        sc.rse_tol = config.rse_tol;
        sc.seed = mix_seed(trial_seed, k_solver_tag + mi);
        sc.trace_stride = config.trace_stride;

        RunResult result;
        result.record.method = spec.name;
        result.record.m = instance.a.rows();
        result.record.n = instance.a.cols();
        result.record.p = instance.b.rows();
        result.record.q = instance.b.cols();
        result.record.tau_a = is_block_method(spec.name) ? spec.tau_a : 0;
        result.record.tau_b = is_block_method(spec.name) ? spec.tau_b : 0;
        result.record.seed = sc.seed;
        try {
            SolveReport report;
            if (is_block_method(spec.name)) {
                const auto& setup = setups.at({spec.tau_a, spec.tau_b});
                report = spec.name == "arbk"
                             ? solve_arbk(instance, setup.row, setup.col, setup.cache, sc)
                             : solve_grbk(instance, setup.row, setup.col, setup.cache, sc);
            } else if (spec.name == "cme_rk") {
                report = solve_cme_rk(instance, sc);
            } else {
                report = solve_gradient(instance, sc);
            }
            result.record.iterations = report.iterations;
            result.record.rse = report.trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                     : report.trace.back().rse;
            result.record.elapsed_seconds = report.elapsed_seconds;
            result.record.termination = report.termination;
            result.trace = std::move(report.trace);
            result.absolute_error = report.absolute_error;
        } catch (const std::exception& e) {
            result.error = e.what();
            result.record.iterations = config.max_iters;
            result.record.rse = std::numeric_limits<double>::quiet_NaN();
            result.record.termination = Termination::max_iters_exceeded;
        }
        results.push_back(std::move(result));
    }
    return results;
}

ExperimentSummary summarize(const ExperimentConfig& config,
                            const std::vector<std::vector<RunResult>>& results) {
    ExperimentSummary summary;
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        MethodSummary ms;
        ms.method = config.methods[mi];
        ms.trials = config.trials;
        std::vector<double> its, rses, cpus;
        for (std::size_t trial = 0; trial < config.trials; ++trial) {
            const RunResult& run = results[trial][mi];
            its.push_back(static_cast<double>(run.record.iterations));
            cpus.push_back(run.record.elapsed_seconds);
            if (std::isfinite(run.record.rse)) rses.push_back(run.record.rse);
            if (run.record.termination == Termination::max_iters_exceeded) ++ms.failures;
            if (!run.error.empty())
                summary.warnings.push_back("trial " + std::to_string(trial) + " " +
                                           method_id(config.methods[mi]) + ": " + run.error);
            if (run.absolute_error)
                summary.warnings.push_back("trial " + std::to_string(trial) + " " +
                                           method_id(config.methods[mi]) +
                                           ": reference norm is zero, trace holds absolute errors");
        }
        ms.mean_it = mean_of(its);
        ms.median_it = median_of(its);
        ms.mean_rse = mean_of(rses);
        ms.median_rse = median_of(rses);
        ms.mean_cpu_s = mean_of(cpus);
        summary.methods.push_back(std::move(ms));
    }
    return summary;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    validate_experiment_config(config);
    const std::string out_dir = resolve_output_dir(config);
    std::filesystem::create_directories(out_dir);

    // random families redraw the instance per trial unless pinned; the
    // fitting family is deterministic, so one instance serves every trial
    const bool shared_instance = config.fix_instance || config.family == Family::bspline;
    ProblemInstance pinned;
    if (shared_instance) pinned = experiment_instance(config, config.base_seed);

    std::vector<std::vector<RunResult>> results(config.trials);
    std::size_t workers = config.workers
                              ? config.workers
                              : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, config.trials);

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;
    auto work = [&]() {
        while (true) {
            const std::size_t trial = next.fetch_add(1);
            if (trial >= config.trials) break;
            try {
                if (shared_instance) {
                    results[trial] = run_trial(config, trial, pinned);
                } else {
                    const ProblemInstance instance =
                        experiment_instance(config, config.base_seed + trial);
                    results[trial] = run_trial(config, trial, instance);
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (!first_error.empty()) throw std::runtime_error(first_error);

    // single writer, fixed order: outputs are byte-identical across reruns
    std::ostringstream runs;
    for (std::size_t trial = 0; trial < config.trials; ++trial)
        for (const auto& run : results[trial]) runs << run_record_json(run.record) << '\n';
    atomic_write_file(out_dir + "/runs.jsonl", runs.str());

    for (std::size_t trial = 0; trial < config.trials; ++trial) {
        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
            const auto& run = results[trial][mi];
            if (run.trace.empty()) continue;
            std::ostringstream trace;
            write_trace_csv(trace, run.trace);
            atomic_write_file(out_dir + "/trace_" + method_id(config.methods[mi]) + "_trial" +
                                  std::to_string(trial) + ".csv",
                              trace.str());
        }
    }

    ExperimentSummary summary = summarize(config, results);
    std::ostringstream csv;
    write_summary_csv(csv, summary);
    atomic_write_file(out_dir + "/summary.csv", csv.str());
    return summary;
}

void write_summary_csv(std::ostream& out, const ExperimentSummary& summary) {
    out << "method,tau_a,tau_b,trials,mean_rse,median_rse,mean_it,median_it,mean_cpu_s,failures\n";
    for (const auto& ms : summary.methods) {
        out << ms.method.name << ',' << ms.method.tau_a << ',' << ms.method.tau_b << ','
            << ms.trials << ',' << format_double(ms.mean_rse) << ','
            << format_double(ms.median_rse) << ',' << format_double(ms.mean_it) << ','
            << format_double(ms.median_it) << ',' << format_double(ms.mean_cpu_s) << ','
            << ms.failures << '\n';
    }
}

void write_summary_table(std::ostream& out, const ExperimentSummary& summary,
                         std::size_t max_iters) {
    out << std::left << std::setw(16) << "method" << std::right << std::setw(7) << "tau_a"
        << std::setw(7) << "tau_b" << std::setw(12) << "median_IT" << std::setw(12) << "mean_RSE"
        << std::setw(12) << "mean_CPU_s" << std::setw(10) << "failures" << '\n';
    for (const auto& ms : summary.methods) {
        std::string med_it;
        if (ms.failures > 0 && ms.median_it >= static_cast<double>(max_iters)) {
            med_it = ">" + std::to_string(max_iters);
        } else {
            std::ostringstream tmp;
            tmp << std::fixed << std::setprecision(1) << ms.median_it;
            med_it = tmp.str();
        }
        std::ostringstream rse, cpu;
        rse << std::scientific << std::setprecision(2) << ms.mean_rse;
        cpu << std::fixed << std::setprecision(3) << ms.mean_cpu_s;
        const bool block = ms.method.tau_a != 0 || ms.method.tau_b != 0;
        out << std::left << std::setw(16) << ms.method.name << std::right << std::setw(7)
            << (block ? std::to_string(ms.method.tau_a) : std::string("-")) << std::setw(7)
            << (block ? std::to_string(ms.method.tau_b) : std::string("-")) << std::setw(12)
            << med_it << std::setw(12) << rse.str() << std::setw(12) << cpu.str()
            << std::setw(10) << ms.failures << '\n';
    }
}

BoundOverlay compare_with_bounds(const ExperimentConfig& config) {
    validate_experiment_config(config);
    if (config.methods.size() != 1 || config.methods[0].name != "arbk")
        throw std::invalid_argument("bounds comparison runs exactly one arbk method spec");
    if (config.m > 2000 || config.q > 2000)
        throw std::invalid_argument(
            "bounds comparison computes full singular spectra; m and q are limited to 2000 "
            "(got m=" +
            std::to_string(config.m) + ", q=" + std::to_string(config.q) + ")");

    BoundOverlay overlay;
    if (config.trials == 1)
        overlay.warnings.push_back("trials=1: empirical curve is a single run, not a mean");

    const ProblemInstance instance = experiment_instance(config, config.base_seed);
    const auto& spec = config.methods[0];
    // the bound is conditional on the partition pair, so it stays fixed
    // across runs; only the solver streams vary
    Rng prng(mix_seed(config.base_seed, k_partition_tag));
    const Partition row = row_random_partition(
        instance.a.rows(), block_count_for_size(instance.a.rows(), spec.tau_a), prng);
    const Partition col = column_random_partition(
        instance.b.cols(), block_count_for_size(instance.b.cols(), spec.tau_b), prng);
    const BlockCache cache = build_block_cache(instance.a, row, instance.b, col);

    DenseMatrix reference;
    if (instance.x_star) {
        reference = *instance.x_star;
    } else {
        reference = multiply(multiply(pseudoinverse(instance.a), instance.f),
                             pseudoinverse(instance.b));
        overlay.warnings.push_back(
            "instance has no attached solution; comparing against the pseudoinverse solution");
    }
    const double ref_norm = frobenius_norm(reference);
    const double x0_err_sq = ref_norm * ref_norm;  // start is the zero matrix
    const double err_scale = ref_norm > 0.0 ? ref_norm : 1.0;

    std::vector<std::vector<TracePoint>> traces;
    traces.reserve(config.trials);
    for (std::size_t i = 0; i < config.trials; ++i) {
        SolveConfig sc;
        sc.max_iters = config.max_iters;
        sc.rse_tol = 1e-300;  // no stopping rule in the expectation being checked
        sc.seed = mix_seed(config.base_seed + i, k_solver_tag);
        sc.trace_stride = config.trace_stride;
        sc.reference_solution = &reference;
        traces.push_back(solve_arbk(instance, row, col, cache, sc).trace);
    }

    // union grid = longest trace; runs that stopped early (exact zero
    // error) hold their last value afterwards
    std::size_t longest = 0;
    for (std::size_t i = 1; i < traces.size(); ++i)
        if (traces[i].size() > traces[longest].size()) longest = i;
    const auto& grid = traces[longest];

    std::vector<std::size_t> cursors(traces.size(), 0);
    for (const auto& pt : grid) {
        double sum_sq = 0.0;
        for (std::size_t r = 0; r < traces.size(); ++r) {
            auto& c = cursors[r];
            while (c + 1 < traces[r].size() && traces[r][c + 1].iteration <= pt.iteration) ++c;
            const double err = traces[r][c].rse * err_scale;
            sum_sq += err * err;
        }
        BoundOverlayPoint point;
        point.k = pt.iteration;
        point.empirical = sum_sq / static_cast<double>(traces.size());
        overlay.points.push_back(point);
    }

    try {
        const PavingBounds s_info = row_paving_bounds(instance.a, row);
        const PavingBounds t_info = col_paving_bounds(instance.b, col);
        if (s_info.rank_deficient || t_info.rank_deficient)
            overlay.warnings.push_back(
                "rank-deficient block Gram matrices; bound uses smallest nonzero eigenvalues");
        std::vector<std::size_t> ks;
        for (const auto& point : overlay.points)
            if (point.k >= 1) ks.push_back(point.k - 1);
        const std::vector<double> bounds =
            arbk_x_error_bound_curve(ks, instance.a, instance.b, s_info, t_info, x0_err_sq);
        std::size_t bi = 0;
        for (auto& point : overlay.points)
            point.bound = point.k == 0 ? x0_err_sq : bounds[bi++];
    } catch (const std::exception& e) {
        overlay.bound_available = false;
        overlay.warnings.push_back(std::string("bound unavailable: ") + e.what());
    }
    return overlay;
}

void write_bound_overlay_csv(std::ostream& out, const BoundOverlay& overlay) {
    out << (overlay.bound_available ? "k,empirical,bound\n" : "k,empirical\n");
    for (const auto& point : overlay.points) {
        out << point.k << ',' << format_double(point.empirical);
        if (overlay.bound_available) out << ',' << format_double(point.bound);
        out << '\n';
    }
}

}  // namespace kmeq
