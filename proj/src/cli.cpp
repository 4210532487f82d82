#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "kmeq/harness.hpp"
#include "kmeq/matrix_io.hpp"
#include "kmeq/rng.hpp"

namespace kmeq {

namespace {

// stream tags match the harness trial formulas, so `solve --seed base+i`
// reproduces trial i of a single-method bench run
constexpr std::uint64_t k_partition_tag = 0x70617274;
constexpr std::uint64_t k_solver_tag = 0x736f6c76;

Family parse_family(const std::string& name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "smatrix") return Family::smatrix;
    if (name == "bspline") return Family::bspline;
    throw std::invalid_argument("unknown family \"" + name + "\"");
}

Surface parse_surface(int which) {
    if (which == 1) return Surface::surface1;
    if (which == 2) return Surface::surface2;
    throw std::invalid_argument("surface must be 1 or 2, got " + std::to_string(which));
}

struct FamilyOptions {
    std::string family = "gaussian";
    std::size_t m = 0, n = 0, p = 0, q = 0;
    std::size_t rank_a = 0, rank_b = 0;
    double sigma_a1 = 0.0, sigma_a2 = 0.0, sigma_b1 = 0.0, sigma_b2 = 0.0;
    int surface = 1;
};

void add_family_flags(CLI::App* cmd, FamilyOptions& fam) {
    cmd->add_option("--family", fam.family, "gaussian, smatrix or bspline");
    cmd->add_option("--m", fam.m, "rows of A");
    cmd->add_option("--n", fam.n, "columns of A");
    cmd->add_option("--p", fam.p, "rows of B");
    cmd->add_option("--q", fam.q, "columns of B");
    cmd->add_option("--rank-a", fam.rank_a, "rank of A (smatrix)");
    cmd->add_option("--rank-b", fam.rank_b, "rank of B (smatrix)");
    cmd->add_option("--sigma-a1", fam.sigma_a1, "largest singular value of A (smatrix)");
    cmd->add_option("--sigma-a2", fam.sigma_a2, "smallest singular value of A (smatrix)");
    cmd->add_option("--sigma-b1", fam.sigma_b1, "largest singular value of B (smatrix)");
    cmd->add_option("--sigma-b2", fam.sigma_b2, "smallest singular value of B (smatrix)");
    cmd->add_option("--surface", fam.surface, "fitted surface, 1 or 2 (bspline)");
}

ExperimentConfig family_config(const FamilyOptions& fam) {
    ExperimentConfig cfg;
    cfg.family = parse_family(fam.family);
    cfg.m = fam.m;
    cfg.n = fam.n;
    cfg.p = fam.p;
    cfg.q = fam.q;
    cfg.rank_a = fam.rank_a;
    cfg.rank_b = fam.rank_b;
    cfg.sigma_a1 = fam.sigma_a1;
    cfg.sigma_a2 = fam.sigma_a2;
    cfg.sigma_b1 = fam.sigma_b1;
    cfg.sigma_b2 = fam.sigma_b2;
    cfg.surface = parse_surface(fam.surface);
    return cfg;
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                ok = true;
                break;
            }
        if (!ok) throw std::invalid_argument(where + ": unknown key \"" + item.key() + "\"");
    }
}

MethodSpec method_from_json(const nlohmann::json& j) {
    require_keys(j, {"name", "tau_a", "tau_b"}, "config method");
    MethodSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.tau_a = j.value("tau_a", std::size_t{0});
    spec.tau_b = j.value("tau_b", std::size_t{0});
    return spec;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    require_keys(j,
                 {"family", "m", "n", "p", "q", "rank_a", "rank_b", "sigma_a1", "sigma_a2",
                  "sigma_b1", "sigma_b2", "surface", "methods", "trials", "rse_tol", "max_iters",
                  "base_seed", "trace_stride", "fix_instance", "output_dir", "workers"},
                 "config");
    ExperimentConfig cfg;
    cfg.family = parse_family(j.value("family", std::string("gaussian")));
    cfg.m = j.value("m", std::size_t{0});
    cfg.n = j.value("n", std::size_t{0});
    cfg.p = j.value("p", std::size_t{0});
    cfg.q = j.value("q", std::size_t{0});
    cfg.rank_a = j.value("rank_a", std::size_t{0});
    cfg.rank_b = j.value("rank_b", std::size_t{0});
    cfg.sigma_a1 = j.value("sigma_a1", 0.0);
    cfg.sigma_a2 = j.value("sigma_a2", 0.0);
    cfg.sigma_b1 = j.value("sigma_b1", 0.0);
    cfg.sigma_b2 = j.value("sigma_b2", 0.0);
    if (j.contains("surface")) cfg.surface = parse_surface(j.at("surface").get<int>());
    if (j.contains("methods")) {
        if (!j.at("methods").is_array())
            throw std::invalid_argument("config: methods must be an array");
        for (const auto& mj : j.at("methods")) cfg.methods.push_back(method_from_json(mj));
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.rse_tol = j.value("rse_tol", cfg.rse_tol);
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.trace_stride = j.value("trace_stride", cfg.trace_stride);
    cfg.fix_instance = j.value("fix_instance", cfg.fix_instance);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.workers = j.value("workers", cfg.workers);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

std::string resolve_out(const std::string& configured) {
    if (!configured.empty()) return configured;
    if (const char* env = std::getenv("KMEQ_OUT"); env != nullptr && *env != '\0') return env;
    return ".";
}

void write_matrix_file(const std::string& path, const DenseMatrix& m) {
    std::ostringstream out;
    write_matrix_csv(out, m);
    atomic_write_file(path, out.str());
}

ProblemInstance load_instance(const std::string& dir) {
    ProblemInstance inst;
    inst.a = read_matrix_csv_file(dir + "/A.csv");
    inst.b = read_matrix_csv_file(dir + "/B.csv");
    inst.f = read_matrix_csv_file(dir + "/F.csv");
    if (inst.f.rows() != inst.a.rows() || inst.f.cols() != inst.b.cols())
        throw std::runtime_error(dir + ": F is " + std::to_string(inst.f.rows()) + "x" +
                                 std::to_string(inst.f.cols()) + ", expected " +
                                 std::to_string(inst.a.rows()) + "x" +
                                 std::to_string(inst.b.cols()));
    const std::string x_path = dir + "/x_star.csv";
    if (std::filesystem::exists(x_path)) {
        DenseMatrix x = read_matrix_csv_file(x_path);
        if (x.rows() != inst.a.cols() || x.cols() != inst.b.rows())
            throw std::runtime_error(x_path + ": expected " + std::to_string(inst.a.cols()) +
                                     "x" + std::to_string(inst.b.rows()));
        inst.x_star = std::move(x);
    }
    inst.provenance.parameters = "loaded from " + dir;
    return inst;
}

int run_generate(const FamilyOptions& fam, std::uint64_t seed, const std::string& out_dir) {
    const ProblemInstance inst = experiment_instance(family_config(fam), seed);
    std::filesystem::create_directories(out_dir);
    write_matrix_file(out_dir + "/A.csv", inst.a);
    write_matrix_file(out_dir + "/B.csv", inst.b);
    write_matrix_file(out_dir + "/F.csv", inst.f);
    if (inst.x_star) write_matrix_file(out_dir + "/x_star.csv", *inst.x_star);
    nlohmann::ordered_json pj;
    pj["family"] = family_name(inst.provenance.family);
    pj["parameters"] = inst.provenance.parameters;
    pj["seed"] = inst.provenance.seed;
    pj["has_x_star"] = inst.x_star.has_value();
    atomic_write_file(out_dir + "/provenance.json", pj.dump(2) + "\n");
    std::cout << "wrote instance to " << out_dir << '\n';
    return 0;
}

struct SolveOptions {
    std::string instance_dir;
    std::string method = "arbk";
    std::size_t tau_a = 0, tau_b = 0;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100000;
    double rse_tol = 5e-2;
    std::size_t trace_stride = 1;
    double step = 0.0;
    bool have_step = false;
    std::string trace_path;
    std::string partitions_path;
};

int run_solve(const FamilyOptions& fam, const SolveOptions& opt) {
    const bool block = opt.method == "arbk" || opt.method == "grbk";
    if (!block && opt.method != "cme_rk" && opt.method != "gradient")
        throw std::invalid_argument("unknown method \"" + opt.method + "\"");
    if (opt.have_step && opt.method != "gradient")
        throw std::invalid_argument("--step only applies to the gradient method");
    if (!opt.partitions_path.empty() && !block)
        throw std::invalid_argument("--dump-partitions only applies to arbk and grbk");

    const ProblemInstance inst = opt.instance_dir.empty()
                                     ? experiment_instance(family_config(fam), opt.seed)
                                     : load_instance(opt.instance_dir);

    SolveConfig sc;
    sc.max_iters = opt.max_iters;
    sc.rse_tol = opt.rse_tol;
    sc.seed = mix_seed(opt.seed, k_solver_tag);
    sc.trace_stride = opt.trace_stride;

    SolveReport report;
    if (block) {
        if (opt.tau_a == 0 || opt.tau_b == 0)
            throw std::invalid_argument(opt.method + " needs --tau-a and --tau-b");
        if (opt.tau_a > inst.a.rows())
            throw std::invalid_argument("--tau-a=" + std::to_string(opt.tau_a) +
                                        " exceeds the row count " +
                                        std::to_string(inst.a.rows()));
        if (opt.tau_b > inst.b.cols())
            throw std::invalid_argument("--tau-b=" + std::to_string(opt.tau_b) +
                                        " exceeds the column count " +
                                        std::to_string(inst.b.cols()));
        Rng prng(mix_seed(mix_seed(opt.seed, k_partition_tag),
                          opt.tau_a * 0x10001 + opt.tau_b));
        const Partition row = row_random_partition(
            inst.a.rows(), block_count_for_size(inst.a.rows(), opt.tau_a), prng);
        const Partition col = column_random_partition(
            inst.b.cols(), block_count_for_size(inst.b.cols(), opt.tau_b), prng);
        if (!opt.partitions_path.empty()) {
            std::ostringstream dump;
            dump << "rows\n";
            write_partition(dump, row);
            dump << "cols\n";
            write_partition(dump, col);
            atomic_write_file(opt.partitions_path, dump.str());
        }
        report = opt.method == "arbk" ? solve_arbk(inst, row, col, sc)
                                      : solve_grbk(inst, row, col, sc);
    } else if (opt.method == "cme_rk") {
        report = solve_cme_rk(inst, sc);
    } else {
        report = opt.have_step ? solve_gradient(inst, opt.step, sc) : solve_gradient(inst, sc);
    }

    RunRecord record;
    record.method = opt.method;
    record.m = inst.a.rows();
    record.n = inst.a.cols();
    record.p = inst.b.rows();
    record.q = inst.b.cols();
    record.tau_a = block ? opt.tau_a : 0;
    record.tau_b = block ? opt.tau_b : 0;
    record.seed = sc.seed;
    record.iterations = report.iterations;
    record.rse = report.trace.empty() ? 0.0 : report.trace.back().rse;
    record.elapsed_seconds = report.elapsed_seconds;
    record.termination = report.termination;
    std::cout << run_record_json(record) << '\n';

    if (!opt.trace_path.empty()) {
        std::ostringstream trace;
        write_trace_csv(trace, report.trace);
        atomic_write_file(opt.trace_path, trace.str());
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"randomized block Kaczmarz solvers for A X B = F"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "draw one problem instance and write its CSVs");
    FamilyOptions gen_fam;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "instance";
    add_family_flags(gen, gen_fam);
    gen->add_option("--seed", gen_seed, "instance seed");
    gen->add_option("--out", gen_out, "output directory");

    auto* solve = app.add_subcommand("solve", "run one solver and print a JSON record");
    FamilyOptions solve_fam;
    SolveOptions solve_opt;
    add_family_flags(solve, solve_fam);
    solve->add_option("--instance-dir", solve_opt.instance_dir,
                      "read A.csv/B.csv/F.csv instead of generating");
    solve->add_option("--method", solve_opt.method, "arbk, grbk, cme_rk or gradient");
    solve->add_option("--tau-a", solve_opt.tau_a, "row block size (arbk/grbk)");
    solve->add_option("--tau-b", solve_opt.tau_b, "column block size (arbk/grbk)");
    solve->add_option("--seed", solve_opt.seed, "run seed");
    solve->add_option("--max-iters", solve_opt.max_iters, "iteration cap");
    solve->add_option("--rse-tol", solve_opt.rse_tol, "relative solution error tolerance");
    solve->add_option("--trace-stride", solve_opt.trace_stride, "record every k-th iteration");
    auto* step_opt = solve->add_option("--step", solve_opt.step, "explicit gradient step size");
    solve->add_option("--trace", solve_opt.trace_path, "write the error trace CSV here");
    solve->add_option("--dump-partitions", solve_opt.partitions_path,
                      "write the drawn row/column blocks here");

    auto* bench = app.add_subcommand("bench", "run a trials x methods experiment from a config");
    std::string bench_config;
    ExperimentConfig bench_ov;  // only fields backed by passed flags are read
    bool bench_fix = false;
    bench->add_option("--config", bench_config, "JSON experiment config")->required();
    auto* ov_trials = bench->add_option("--trials", bench_ov.trials, "override trial count");
    auto* ov_seed = bench->add_option("--seed", bench_ov.base_seed, "override base seed");
    auto* ov_out = bench->add_option("--out", bench_ov.output_dir, "override output directory");
    auto* ov_workers = bench->add_option("--workers", bench_ov.workers, "parallel trial workers");
    auto* ov_stride =
        bench->add_option("--trace-stride", bench_ov.trace_stride, "override trace stride");
    auto* ov_max = bench->add_option("--max-iters", bench_ov.max_iters, "override iteration cap");
    auto* ov_tol = bench->add_option("--rse-tol", bench_ov.rse_tol, "override tolerance");
    auto* ov_fix = bench->add_flag("--fix-instance", bench_fix, "share one instance across trials");

    auto* bounds = app.add_subcommand("bounds", "empirical mean squared error vs the closed-form bound");
    std::string bounds_config;
    ExperimentConfig bounds_ov;
    bounds->add_option("--config", bounds_config, "JSON config with a single arbk method")
        ->required();
    auto* bov_trials = bounds->add_option("--trials", bounds_ov.trials, "override trial count");
    auto* bov_seed = bounds->add_option("--seed", bounds_ov.base_seed, "override base seed");
    auto* bov_out = bounds->add_option("--out", bounds_ov.output_dir, "override output directory");
    auto* bov_max =
        bounds->add_option("--max-iters", bounds_ov.max_iters, "override iteration horizon");
    auto* bov_stride =
        bounds->add_option("--trace-stride", bounds_ov.trace_stride, "override trace stride");

    auto* surfaces = app.add_subcommand("surfaces", "sample a test surface onto a grid CSV");
    int surf_which = 1;
    std::size_t surf_m = 150, surf_q = 150;
    std::string surf_out;
    surfaces->add_option("--surface", surf_which, "surface 1 or 2");
    surfaces->add_option("--m", surf_m, "grid rows");
    surfaces->add_option("--q", surf_q, "grid columns");
    surfaces->add_option("--out", surf_out, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(gen)) return run_generate(gen_fam, gen_seed, gen_out);
        if (app.got_subcommand(solve)) {
            solve_opt.have_step = step_opt->count() > 0;
            return run_solve(solve_fam, solve_opt);
        }
        if (app.got_subcommand(bench)) {
            ExperimentConfig cfg = load_config_file(bench_config);
            if (ov_trials->count()) cfg.trials = bench_ov.trials;
            if (ov_seed->count()) cfg.base_seed = bench_ov.base_seed;
            if (ov_out->count()) cfg.output_dir = bench_ov.output_dir;
            if (ov_workers->count()) cfg.workers = bench_ov.workers;
            if (ov_stride->count()) cfg.trace_stride = bench_ov.trace_stride;
            if (ov_max->count()) cfg.max_iters = bench_ov.max_iters;
            if (ov_tol->count()) cfg.rse_tol = bench_ov.rse_tol;
            if (ov_fix->count()) cfg.fix_instance = bench_fix;
            const ExperimentSummary summary = run_experiment(cfg);
            write_summary_table(std::cout, summary, cfg.max_iters);
            for (const auto& warning : summary.warnings)
                std::cerr << "warning: " << warning << '\n';
            std::cout << "outputs in " << resolve_out(cfg.output_dir) << '\n';
            return 0;
        }
        if (app.got_subcommand(bounds)) {
            ExperimentConfig cfg = load_config_file(bounds_config);
            if (bov_trials->count()) cfg.trials = bounds_ov.trials;
            if (bov_seed->count()) cfg.base_seed = bounds_ov.base_seed;
            if (bov_out->count()) cfg.output_dir = bounds_ov.output_dir;
            if (bov_max->count()) cfg.max_iters = bounds_ov.max_iters;
            if (bov_stride->count()) cfg.trace_stride = bounds_ov.trace_stride;
            const BoundOverlay overlay = compare_with_bounds(cfg);
            const std::string out_dir = resolve_out(cfg.output_dir);
            std::filesystem::create_directories(out_dir);
            std::ostringstream csv;
            write_bound_overlay_csv(csv, overlay);
            atomic_write_file(out_dir + "/overlay.csv", csv.str());
            for (const auto& warning : overlay.warnings)
                std::cerr << "warning: " << warning << '\n';
            std::cout << "wrote " << out_dir << "/overlay.csv" << '\n';
            return 0;
        }
        if (app.got_subcommand(surfaces)) {
            const SurfaceSample sample = surface_samples(parse_surface(surf_which), surf_m, surf_q);
            if (surf_out.empty()) {
                write_surface_csv(std::cout, sample);
            } else {
                std::ostringstream csv;
                write_surface_csv(csv, sample);
                atomic_write_file(surf_out, csv.str());
                std::cout << "wrote " << surf_out << '\n';
            }
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace kmeq
