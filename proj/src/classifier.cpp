#include "crlkit/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "crlkit/common.hpp"

namespace crlkit {

namespace {

int count_classes(const std::vector<int>& labels) {
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw ConfigError("fit_classifier: labels must be non-negative");
        max_label = std::max(max_label, l);
    }
    int classes = max_label + 1;
    std::vector<char> present(static_cast<std::size_t>(classes), 0);
    for (int l : labels) present[static_cast<std::size_t>(l)] = 1;
    int distinct = 0;
    for (char c : present) distinct += c;
    if (distinct < 2) throw ConfigError("fit_classifier: need at least two classes");
    return classes;
}

// Row-wise softmax in place, numerically shifted.
void softmax_rows(DenseMatrix& logits) {
    for (std::size_t r = 0; r < logits.rows; ++r) {
        double* row = logits.row_ptr(r);
        double mx = row[0];
        for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < logits.cols; ++c) row[c] /= sum;
    }
}

// Largest squared singular value of [H | 1] via power iteration; bounds the
// softmax Hessian spectral norm by sigma^2/(2n).
double sq_spectral_norm_aug(const DenseMatrix& H) {
    const std::size_t n = H.rows, d = H.cols + 1;
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> hv(n, 0.0), back(d, 0.0);
    double lambda = 0.0;
    for (int iter = 0; iter < 30; ++iter) {
        for (std::size_t r = 0; r < n; ++r) {
            const double* row = H.row_ptr(r);
            double acc = v[H.cols];  // the ones column
            for (std::size_t c = 0; c < H.cols; ++c) acc += row[c] * v[c];
            hv[r] = acc;
        }
        std::fill(back.begin(), back.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double* row = H.row_ptr(r);
            for (std::size_t c = 0; c < H.cols; ++c) back[c] += row[c] * hv[r];
            back[H.cols] += hv[r];
        }
        double norm = 0.0;
        for (double x : back) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 1.0;
        lambda = norm;
        for (std::size_t i = 0; i < d; ++i) v[i] = back[i] / norm;
    }
    return lambda;  // ||A^T A v|| converges to sigma_max^2
}

}  // namespace

LinearClassifier fit_classifier(const DenseMatrix& H, const std::vector<int>& labels,
                                double l2, std::size_t max_iters, double grad_tol) {
    if (H.rows != labels.size())
        throw DimensionError("fit_classifier: row count does not match label count");
    if (H.rows == 0) throw DimensionError("fit_classifier: empty input");
    const int classes = count_classes(labels);
    const std::size_t n = H.rows, d = H.cols, K = static_cast<std::size_t>(classes);

    LinearClassifier clf;
    clf.weights = DenseMatrix(K, d, 0.0);
    clf.bias = DenseVector(K, 0.0);
    clf.l2 = l2;

    // 1/L step size: L <= sigma_max^2/(2n) + l2 for the mean softmax loss.
    double lipschitz = sq_spectral_norm_aug(H) / (2.0 * static_cast<double>(n)) + l2;
    double lr = 1.0 / std::max(lipschitz, 1e-12);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        DenseMatrix P = matmul_nt(H, clf.weights);  // n x K
        add_row_broadcast(P, clf.bias);
        softmax_rows(P);
        // P - Y in place.
        for (std::size_t r = 0; r < n; ++r)
            P(r, static_cast<std::size_t>(labels[r])) -= 1.0;
        DenseMatrix gW = matmul_tn(P, H);  // K x d
        scale_inplace(gW, inv_n);
        for (std::size_t i = 0; i < gW.size(); ++i) gW.data[i] += l2 * clf.weights.data[i];
        DenseVector gb = col_sums(P);
        for (double& v : gb.data) v *= inv_n;

        double gmax = 0.0;
        for (double v : gW.data) gmax = std::max(gmax, std::fabs(v));
        for (double v : gb.data) gmax = std::max(gmax, std::fabs(v));
        if (gmax <= grad_tol) break;

        for (std::size_t i = 0; i < gW.size(); ++i) clf.weights.data[i] -= lr * gW.data[i];
        for (std::size_t i = 0; i < K; ++i) clf.bias[i] -= lr * gb[i];
    }
    return clf;
}

std::vector<int> classify(const LinearClassifier& clf, const DenseMatrix& H) {
    if (H.cols != clf.weights.cols)
        throw DimensionError("classify: feature width does not match the classifier");
    DenseMatrix logits = matmul_nt(H, clf.weights);
    add_row_broadcast(logits, clf.bias);
    std::vector<int> out(H.rows);
    for (std::size_t r = 0; r < H.rows; ++r) {
        const double* row = logits.row_ptr(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c)
            if (row[c] > row[best]) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw DimensionError("accuracy: length mismatch");
    if (predictions.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double classifier_loss(const LinearClassifier& clf, const DenseMatrix& H,
                       const std::vector<int>& labels) {
    DenseMatrix P = matmul_nt(H, clf.weights);
    add_row_broadcast(P, clf.bias);
    softmax_rows(P);
    double loss = 0.0;
    for (std::size_t r = 0; r < H.rows; ++r) {
        double p = P(r, static_cast<std::size_t>(labels[r]));
        loss -= std::log(std::max(p, 1e-300));
    }
    loss /= static_cast<double>(H.rows);
    double reg = 0.0;
    for (double w : clf.weights.data) reg += w * w;
    return loss + 0.5 * clf.l2 * reg;
}

}  // namespace crlkit
