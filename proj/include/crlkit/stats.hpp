#pragma once

#include <cstddef>
#include <vector>

#include "crlkit/matrix.hpp"

namespace crlkit {

/// Sample Pearson correlation of two equal-length vectors (len >= 2).
/// Returns 0 when either vector is constant, keeping downstream losses
/// finite at dead-unit initialization.
double pearson(const DenseVector& x, const DenseVector& y);

double pearson(const double* x, const double* y, std::size_t n);

/// Average ranks (ties get the mean of their rank span), 1-based.
std::vector<double> average_ranks(const std::vector<double>& v);

/// Spearman's rho: Pearson correlation of average-ranked data.
double spearman(const DenseVector& x, const DenseVector& y);

}  // namespace crlkit
