#include "kmeq/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace kmeq {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view token, std::size_t line_no) {
    // tolerate surrounding spaces
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t'))
        token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' ||
                              token.back() == '\r'))
        token.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw std::runtime_error("matrix csv: bad number \"" + std::string(token) +
                                 "\" on line " + std::to_string(line_no));
    return value;
}

}  // namespace

DenseMatrix read_matrix_csv(std::istream& in) {
    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw std::runtime_error("matrix csv: empty line " + std::to_string(line_no));
        }
        std::size_t row_cols = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view token(line.data() + start,
                                         (comma == std::string::npos ? line.size() : comma) - start);
            data.push_back(parse_double(token, line_no));
            ++row_cols;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (rows == 0)
            cols = row_cols;
        else if (row_cols != cols)
            throw std::runtime_error("matrix csv: line " + std::to_string(line_no) + " has " +
                                     std::to_string(row_cols) + " fields, expected " +
                                     std::to_string(cols));
        ++rows;
    }
    if (rows == 0) throw std::runtime_error("matrix csv: no rows");
    return DenseMatrix::from_data(rows, cols, std::move(data));
}

DenseMatrix read_matrix_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return read_matrix_csv(in);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_matrix_csv(std::ostream& out, const DenseMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "iteration,rse\n";
    for (const auto& pt : trace)
        out << pt.iteration << ',' << format_double(pt.rse) << '\n';
}

void write_bound_curve_csv(std::ostream& out, const std::vector<std::size_t>& ks,
                           const std::vector<double>& bounds) {
    if (ks.size() != bounds.size())
        throw std::invalid_argument("bound curve: ks and bounds lengths differ");
    out << "k,bound\n";
    for (std::size_t i = 0; i < ks.size(); ++i)
        out << ks[i] << ',' << format_double(bounds[i]) << '\n';
}

void write_surface_csv(std::ostream& out, const SurfaceSample& sample) {
    out << "s,t,x,y,z\n";
    const std::size_t m = sample.zs.rows();
    const std::size_t q = sample.zs.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double s = sample.s_min + (sample.s_max - sample.s_min) *
                                            static_cast<double>(i) / static_cast<double>(m - 1);
        for (std::size_t j = 0; j < q; ++j) {
            const double t = sample.t_min + (sample.t_max - sample.t_min) *
                                                static_cast<double>(j) / static_cast<double>(q - 1);
            out << format_double(s) << ',' << format_double(t) << ','
                << format_double(sample.xs(i, j)) << ',' << format_double(sample.ys(i, j))
                << ',' << format_double(sample.zs(i, j)) << '\n';
        }
    }
}

std::string run_record_json(const RunRecord& record) {
    nlohmann::ordered_json j;
    j["method"] = record.method;
    j["m"] = record.m;
    j["n"] = record.n;
    j["p"] = record.p;
    j["q"] = record.q;
    j["tau_a"] = record.tau_a;
    j["tau_b"] = record.tau_b;
    j["seed"] = record.seed;
    j["iterations"] = record.iterations;
    j["rse"] = record.rse;
    j["elapsed_seconds"] = record.elapsed_seconds;
    j["termination"] = termination_name(record.termination);
    return j.dump();
}

void atomic_write_file(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed for " + path);
}

}  // namespace kmeq
