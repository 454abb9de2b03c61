#include "crlkit/cca.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace crlkit {

namespace {

using EigenMat = Eigen::MatrixXd;

EigenMat to_eigen(const DenseMatrix& m) {
    EigenMat out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, c);
    return out;
}

DenseMatrix from_eigen(const EigenMat& m) {
    DenseMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
    return out;
}

constexpr double kEigTol = 1e-10;

// Inverse square root of a symmetric PSD matrix; throws when an eigenvalue
// falls below kEigTol relative to the largest (singular covariance).
EigenMat inv_sqrt_sym(const EigenMat& S, double ridge) {
    Eigen::SelfAdjointEigenSolver<EigenMat> es(S);
    if (es.info() != Eigen::Success) throw NumericError("CCA: eigendecomposition failed");
    const auto& evals = es.eigenvalues();
    double largest = evals.maxCoeff();
    double floor = kEigTol * std::max(largest, 1.0);
    EigenMat d = EigenMat::Zero(S.rows(), S.cols());
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals[i] <= floor) {
            if (ridge == 0.0)
                throw NumericError(
                    "CCA: covariance matrix is singular; pass ridge > 0 to regularize");
            throw NumericError("CCA: covariance matrix is singular even after ridge");
        }
        d(i, i) = 1.0 / std::sqrt(evals[i]);
    }
    return es.eigenvectors() * d * es.eigenvectors().transpose();
}

}  // namespace

CcaModel fit_cca(const DenseMatrix& X, const DenseMatrix& Y, std::size_t k, double ridge) {
    if (X.rows != Y.rows) throw DimensionError("fit_cca: X and Y row counts differ");
    const std::size_t n = X.rows, d1 = X.cols, d2 = Y.cols;
    if (n < 2) throw DimensionError("fit_cca: need at least 2 samples");
    if (k > std::min(d1, d2))
        throw DimensionError("fit_cca: k=" + std::to_string(k) + " exceeds min(d1,d2)=" +
                             std::to_string(std::min(d1, d2)));
    if (ridge < 0.0) throw ConfigError("fit_cca: ridge must be >= 0");

    EigenMat Xe = to_eigen(X);
    EigenMat Ye = to_eigen(Y);
    Eigen::RowVectorXd mx = Xe.colwise().mean();
    Eigen::RowVectorXd my = Ye.colwise().mean();
    Xe.rowwise() -= mx;
    Ye.rowwise() -= my;

    const double denom = static_cast<double>(n - 1);
    EigenMat Sxx = (Xe.transpose() * Xe) / denom;
    EigenMat Syy = (Ye.transpose() * Ye) / denom;
    EigenMat Sxy = (Xe.transpose() * Ye) / denom;
    Sxx.diagonal().array() += ridge;
    Syy.diagonal().array() += ridge;

    EigenMat Wx = inv_sqrt_sym(Sxx, ridge);
    EigenMat Wy = inv_sqrt_sym(Syy, ridge);

    EigenMat M = Wx * Sxy * Wy;
    Eigen::BDCSVD<EigenMat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);

    CcaModel model;
    model.mean_x = DenseVector(d1);
    model.mean_y = DenseVector(d2);
    for (std::size_t i = 0; i < d1; ++i) model.mean_x[i] = mx[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < d2; ++i) model.mean_y[i] = my[static_cast<Eigen::Index>(i)];

    EigenMat px = Wx * svd.matrixU().leftCols(static_cast<Eigen::Index>(k));
    EigenMat py = Wy * svd.matrixV().leftCols(static_cast<Eigen::Index>(k));
    model.proj_x = from_eigen(px);
    model.proj_y = from_eigen(py);
    model.correlations = DenseVector(k);
    for (std::size_t i = 0; i < k; ++i) {
        double s = svd.singularValues()[static_cast<Eigen::Index>(i)];
        model.correlations[i] = std::clamp(s, 0.0, 1.0);
    }
    return model;
}

DenseMatrix project(const CcaModel& model, View view, const DenseMatrix& data) {
    const DenseVector& mean = view == View::X ? model.mean_x : model.mean_y;
    const DenseMatrix& proj = view == View::X ? model.proj_x : model.proj_y;
    if (data.cols != mean.len())
        throw DimensionError("project: data has " + std::to_string(data.cols) +
                             " columns, model expects " + std::to_string(mean.len()));
    DenseMatrix centered = data;
    for (std::size_t r = 0; r < centered.rows; ++r) {
        double* row = centered.row_ptr(r);
        for (std::size_t c = 0; c < centered.cols; ++c) row[c] -= mean[c];
    }
    return matmul(centered, proj);
}

}  // namespace crlkit
