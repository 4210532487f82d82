#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kmeq/dense_matrix.hpp"
#include "kmeq/problems.hpp"
#include "kmeq/solvers.hpp"

namespace kmeq {

// Shortest round-trip decimal rendering (std::to_chars); the same value
// always renders to the same text, so repeated runs diff clean.
std::string format_double(double v);

// CSV, one matrix row per line, no header; shape inferred on read.
// Malformed content throws std::runtime_error with the line number.
DenseMatrix read_matrix_csv(std::istream& in);
DenseMatrix read_matrix_csv_file(const std::string& path);
void write_matrix_csv(std::ostream& out, const DenseMatrix& m);

// header `iteration,rse`
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

// header `k,bound`
void write_bound_curve_csv(std::ostream& out, const std::vector<std::size_t>& ks,
                           const std::vector<double>& bounds);

// header `s,t,x,y,z`, row-major over the grid
void write_surface_csv(std::ostream& out, const SurfaceSample& sample);

// Single-run record rendered as one JSON object.
struct RunRecord {
    std::string method;
    std::size_t m = 0, n = 0, p = 0, q = 0;
    std::size_t tau_a = 0, tau_b = 0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    double rse = 0.0;
    double elapsed_seconds = 0.0;
    Termination termination = Termination::tolerance_reached;
};

std::string run_record_json(const RunRecord& record);

// write-then-rename so partial output is never observed at `path`
void atomic_write_file(const std::string& path, const std::string& contents);

}  // namespace kmeq
