#include "crlkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "crlkit/common.hpp"

namespace crlkit {

double pearson(const double* x, const double* y, std::size_t n) {
    if (n < 2) throw DimensionError("pearson: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double pearson(const DenseVector& x, const DenseVector& y) {
    if (x.len() != y.len())
        throw DimensionError("pearson: length mismatch " + std::to_string(x.len()) + " vs " +
                             std::to_string(y.len()));
    return pearson(x.data.data(), y.data.data(), x.len());
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // Tie group occupies ranks i+1 .. j+1; every member gets the mean.
        double r = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(const DenseVector& x, const DenseVector& y) {
    if (x.len() != y.len())
        throw DimensionError("spearman: length mismatch " + std::to_string(x.len()) + " vs " +
                             std::to_string(y.len()));
    std::vector<double> rx = average_ranks(x.data);
    std::vector<double> ry = average_ranks(y.data);
    return pearson(rx.data(), ry.data(), rx.size());
}

}  // namespace crlkit
