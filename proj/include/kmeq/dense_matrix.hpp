#pragma once

#include <cstddef>
#include <vector>

namespace kmeq {

// Dense real matrix, row-major. Shape is fixed at construction; entries
// are mutable. from_data validates finiteness, the raw constructors do not
// (they are the hot path for intermediate results).
class DenseMatrix {
public:
    DenseMatrix() = default;

    // zero-filled rows x cols
    DenseMatrix(std::size_t rows, std::size_t cols);

    static DenseMatrix from_data(std::size_t rows, std::size_t cols,
                                 std::vector<double> data);
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix filled(std::size_t rows, std::size_t cols, double value);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    bool same_shape(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool empty() const { return data_.empty(); }

private:
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {}

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix transpose(const DenseMatrix& m);
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
// c = alpha*a*b + beta*c; shapes must already conform
void multiply_into(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b,
                   double alpha = 1.0, double beta = 0.0);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace kmeq
