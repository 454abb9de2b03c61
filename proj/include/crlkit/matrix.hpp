#pragma once

#include <cstddef>
#include <vector>

#include "crlkit/common.hpp"

namespace crlkit {

/// Dense row-major matrix of doubles. The substrate for all model math.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }
};

struct DenseVector {
    std::vector<double> data;

    DenseVector() = default;
    explicit DenseVector(std::size_t n, double fill = 0.0) : data(n, fill) {}
    DenseVector(std::initializer_list<double> init) : data(init) {}

    std::size_t len() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

// Products. a*b, a^T*b and a*b^T cover every contraction the models need;
// all three check conformance and throw DimensionError otherwise.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // a^T * b
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a * b^T

DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
void scale_inplace(DenseMatrix& a, double s);
void add_inplace(DenseMatrix& a, const DenseMatrix& b);

/// Adds v to every row of m (bias broadcast).
void add_row_broadcast(DenseMatrix& m, const DenseVector& v);

DenseVector col_sums(const DenseMatrix& m);
DenseVector col_means(const DenseMatrix& m);

/// Extracts columns [c0, c1) as a new matrix.
DenseMatrix slice_cols(const DenseMatrix& m, std::size_t c0, std::size_t c1);
/// Extracts rows [r0, r1) as a new matrix.
DenseMatrix slice_rows(const DenseMatrix& m, std::size_t r0, std::size_t r1);
/// Concatenates [a | b] column-wise.
DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b);

bool all_finite(const DenseMatrix& m);
bool all_finite(const DenseVector& v);

}  // namespace crlkit
