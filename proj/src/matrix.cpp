#include "crlkit/matrix.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace crlkit {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;

ConstMap as_eigen(const DenseMatrix& m) {
    return ConstMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
                    static_cast<Eigen::Index>(m.cols));
}

[[noreturn]] void dim_error(const char* op, const DenseMatrix& a, const DenseMatrix& b) {
    throw DimensionError(std::string(op) + ": shapes (" + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + ") and (" + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols) + ") do not conform");
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) dim_error("matmul", a, b);
    DenseMatrix out(a.rows, b.cols);
    Map(out.data.data(), out.rows, out.cols).noalias() = as_eigen(a) * as_eigen(b);
    return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows) dim_error("matmul_tn", a, b);
    DenseMatrix out(a.cols, b.cols);
    Map(out.data.data(), out.rows, out.cols).noalias() =
        as_eigen(a).transpose() * as_eigen(b);
    return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols) dim_error("matmul_nt", a, b);
    DenseMatrix out(a.rows, b.rows);
    Map(out.data.data(), out.rows, out.cols).noalias() =
        as_eigen(a) * as_eigen(b).transpose();
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols, a.rows);
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t c = 0; c < a.cols; ++c) out(c, r) = a(r, c);
    return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) dim_error("add", a, b);
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) dim_error("sub", a, b);
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] - b.data[i];
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) dim_error("hadamard", a, b);
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

void scale_inplace(DenseMatrix& a, double s) {
    for (double& v : a.data) v *= s;
}

void add_inplace(DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) dim_error("add_inplace", a, b);
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

void add_row_broadcast(DenseMatrix& m, const DenseVector& v) {
    if (m.cols != v.len())
        throw DimensionError("add_row_broadcast: vector length " + std::to_string(v.len()) +
                             " != cols " + std::to_string(m.cols));
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.row_ptr(r);
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += v[c];
    }
}

DenseVector col_sums(const DenseMatrix& m) {
    DenseVector out(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row_ptr(r);
        for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c];
    }
    return out;
}

DenseVector col_means(const DenseMatrix& m) {
    DenseVector out = col_sums(m);
    if (m.rows > 0)
        for (double& v : out.data) v /= static_cast<double>(m.rows);
    return out;
}

DenseMatrix slice_cols(const DenseMatrix& m, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > m.cols)
        throw DimensionError("slice_cols: bad range [" + std::to_string(c0) + "," +
                             std::to_string(c1) + ") for cols " + std::to_string(m.cols));
    DenseMatrix out(m.rows, c1 - c0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = c0; c < c1; ++c) out(r, c - c0) = m(r, c);
    return out;
}

DenseMatrix slice_rows(const DenseMatrix& m, std::size_t r0, std::size_t r1) {
    if (r0 > r1 || r1 > m.rows)
        throw DimensionError("slice_rows: bad range [" + std::to_string(r0) + "," +
                             std::to_string(r1) + ") for rows " + std::to_string(m.rows));
    DenseMatrix out(r1 - r0, m.cols);
    for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) out(r - r0, c) = m(r, c);
    return out;
}

DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows) dim_error("hcat", a, b);
    DenseMatrix out(a.rows, a.cols + b.cols);
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t c = 0; c < a.cols; ++c) out(r, c) = a(r, c);
        for (std::size_t c = 0; c < b.cols; ++c) out(r, a.cols + c) = b(r, c);
    }
    return out;
}

bool all_finite(const DenseMatrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const DenseVector& v) {
    for (double x : v.data)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace crlkit
