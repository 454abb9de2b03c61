#pragma once

#include "crlkit/common.hpp"
#include "crlkit/matrix.hpp"

namespace crlkit {

/// Linear CCA fitted in closed form: projections of centered data onto the
/// canonical directions, with per-pair canonical correlations sorted
/// descending.
struct CcaModel {
    DenseVector mean_x;       // d1
    DenseVector mean_y;       // d2
    DenseMatrix proj_x;       // d1 x k
    DenseMatrix proj_y;       // d2 x k
    DenseVector correlations; // k, descending, each in [0, 1]
};

/// Solves the canonical correlation problem on centered data with
/// ridge-regularized covariances (Sxx + ridge*I, Syy + ridge*I), via
/// whitening and an SVD of the whitened cross-covariance. Keeps the top-k
/// pairs.
///
/// Throws on k > min(d1, d2); with ridge = 0 a singular covariance throws
/// with a message advising a positive ridge.
CcaModel fit_cca(const DenseMatrix& X, const DenseMatrix& Y, std::size_t k, double ridge);

/// Centered data times the fitted projection for one view.
DenseMatrix project(const CcaModel& model, View view, const DenseMatrix& data);

}  // namespace crlkit
