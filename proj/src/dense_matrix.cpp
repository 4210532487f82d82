#include "kmeq/dense_matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "kmeq/kernels.hpp"

namespace kmeq {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("matrix dimensions must be positive");
}

DenseMatrix DenseMatrix::from_data(std::size_t rows, std::size_t cols,
                                   std::vector<double> data) {
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("matrix dimensions must be positive");
    if (data.size() != rows * cols)
        throw std::invalid_argument("matrix data length " + std::to_string(data.size()) +
                                    " does not match " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    for (double v : data)
        if (!std::isfinite(v))
            throw std::invalid_argument("matrix entries must be finite");
    return DenseMatrix(rows, cols, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::filled(std::size_t rows, std::size_t cols, double value) {
    DenseMatrix m(rows, cols);
    for (double& v : m.data_) v = value;
    return m;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("multiply: inner dimensions " +
                                    std::to_string(a.cols()) + " and " +
                                    std::to_string(b.rows()) + " differ");
    DenseMatrix c(a.rows(), b.cols());
    multiply_into(c, a, b);
    return c;
}

void multiply_into(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b,
                   double alpha, double beta) {
    if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
        throw std::invalid_argument("multiply_into: shape mismatch");
    kernels::active().gemm(a.rows(), b.cols(), a.cols(), alpha, a.data(), a.cols(),
                           b.data(), b.cols(), beta, c.data(), c.cols());
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("subtract: shape mismatch");
    DenseMatrix c = a;
    kernels::active().axpy(-1.0, b.data(), c.data(), c.size());
    return c;
}

}  // namespace kmeq
