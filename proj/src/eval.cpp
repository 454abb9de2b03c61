#include "crlkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "crlkit/rng.hpp"
#include "crlkit/stats.hpp"

namespace crlkit {

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

}  // namespace

std::string EvalReport::to_csv() const {
    std::ostringstream s;
    s << "sum_correlation,mse_self,mse_cross,transfer_l2r,transfer_r2l,folds";
    std::vector<std::string> keys;
    for (const auto& [k, v] : metadata) keys.push_back(k);
    for (const std::string& k : keys) s << "," << k;
    s << "\n";
    auto cell = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
    s << cell(sum_correlation) << "," << cell(mse_self) << "," << cell(mse_cross) << ","
      << cell(transfer_l2r) << "," << cell(transfer_r2l) << "," << folds;
    for (const std::string& k : keys) s << "," << metadata.at(k);
    s << "\n";
    return s.str();
}

std::string EvalReport::to_text() const {
    std::ostringstream s;
    auto line = [&](const char* name, const std::optional<double>& v, const char* unit = "") {
        if (v) s << name << ": " << fmt(*v) << unit << "\n";
    };
    line("sum correlation", sum_correlation);
    line("self-reconstruction MSE (per element)", mse_self);
    line("cross-reconstruction MSE (per element)", mse_cross);
    line("transfer left->right", transfer_l2r, " %");
    line("transfer right->left", transfer_r2l, " %");
    if (folds > 0) s << "folds: " << folds << "\n";
    for (const auto& [k, v] : metadata) s << k << ": " << v << "\n";
    return s.str();
}

double sum_correlation(const DenseMatrix& Hx, const DenseMatrix& Hy) {
    if (Hx.rows != Hy.rows || Hx.cols != Hy.cols)
        throw DimensionError("sum_correlation: shape mismatch");
    if (Hx.rows < 2) throw DimensionError("sum_correlation: need at least 2 rows");
    double total = 0.0;
    std::vector<double> a(Hx.rows), b(Hx.rows);
    for (std::size_t j = 0; j < Hx.cols; ++j) {
        for (std::size_t i = 0; i < Hx.rows; ++i) {
            a[i] = Hx(i, j);
            b[i] = Hy(i, j);
        }
        total += pearson(a.data(), b.data(), a.size());
    }
    return total;
}

std::pair<double, double> reconstruction_mse(const CorrNetParams& p, const TwoViewBatch& batch) {
    DenseMatrix Hx = encode_x(p, batch.X);
    auto [Xr, Yr] = decode(p, Hx);
    double se_self = 0.0, se_cross = 0.0;
    for (std::size_t i = 0; i < batch.X.size(); ++i) {
        double d = batch.X.data[i] - Xr.data[i];
        se_self += d * d;
    }
    for (std::size_t i = 0; i < batch.Y.size(); ++i) {
        double d = batch.Y.data[i] - Yr.data[i];
        se_cross += d * d;
    }
    return {se_self / static_cast<double>(batch.X.size()),
            se_cross / static_cast<double>(batch.Y.size())};
}

double transfer_accuracy_reps(const DenseMatrix& Htrain, const std::vector<int>& train_labels,
                              const DenseMatrix& Htest, const std::vector<int>& test_labels,
                              std::size_t folds, double l2, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("transfer_accuracy: folds must be >= 2");
    if (Htest.rows != test_labels.size())
        throw DimensionError("transfer_accuracy: test label count mismatch");
    if (Htest.rows < folds) throw DimensionError("transfer_accuracy: fewer test rows than folds");

    std::vector<std::size_t> perm(Htest.rows);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);

    double acc_sum = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t lo = f * Htest.rows / folds;
        std::size_t hi = (f + 1) * Htest.rows / folds;
        LinearClassifier clf = fit_classifier(Htrain, train_labels, l2);
        DenseMatrix fold(hi - lo, Htest.cols);
        std::vector<int> fold_labels(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            std::copy(Htest.row_ptr(perm[i]), Htest.row_ptr(perm[i]) + Htest.cols,
                      fold.row_ptr(i - lo));
            fold_labels[i - lo] = test_labels[perm[i]];
        }
        acc_sum += accuracy(classify(clf, fold), fold_labels);
    }
    return 100.0 * acc_sum / static_cast<double>(folds);
}

double transfer_accuracy(const CorrNetParams& p, View train_view,
                         const DenseMatrix& train_view_data,
                         const std::vector<int>& train_labels,
                         const DenseMatrix& test_other_view_data,
                         const std::vector<int>& test_labels, std::size_t folds, double l2,
                         std::uint64_t seed) {
    DenseMatrix Htrain = encode_view(p, train_view, train_view_data);
    DenseMatrix Htest = encode_view(p, other_view(train_view), test_other_view_data);
    return transfer_accuracy_reps(Htrain, train_labels, Htest, test_labels, folds, l2, seed);
}

std::vector<AblationRow> ablation_grid(const ViewedDataset& train_data, const ViewedDataset& test_data,
                                       const std::vector<LossTermMask>& masks,
                                       const TrainConfig& cfg, std::size_t k, Activation f,
                                       Activation g, ReconLoss loss, std::size_t folds,
                                       double l2) {
    if (masks.empty()) throw ConfigError("ablation_grid: empty mask list");
    std::vector<AblationRow> rows;
    std::vector<TwoViewBatch> batches =
        make_batches(train_data.X, train_data.Y, cfg.batch_size);
    for (const LossTermMask& mask : masks) {
        TrainConfig mcfg = cfg;
        mcfg.mask = mask;
        mcfg.lambda = mask.lambda;
        Rng init_rng = Rng(cfg.seed).split(0xab1a7e);
        CorrNetParams p =
            init_corrnet(k, train_data.X.cols, train_data.Y.cols, f, g, loss, init_rng);
        TrainResult res = train(std::move(p), batches, mcfg);
        AblationRow row;
        row.mask = mask;
        row.transfer_l2r =
            transfer_accuracy(res.params, View::X, train_data.X, train_data.labels,
                              test_data.Y, test_data.labels, folds, l2, cfg.seed);
        row.transfer_r2l =
            transfer_accuracy(res.params, View::Y, train_data.Y, train_data.labels,
                              test_data.X, test_data.labels, folds, l2, cfg.seed);
        rows.push_back(std::move(row));
    }
    return rows;
}

double correlation_score(const CorrNetParams& p, const DenseVector& x, const DenseVector& y) {
    if (p.k < 2) throw DimensionError("correlation_score: needs k >= 2 hidden dimensions");
    DenseMatrix xm(1, x.len());
    DenseMatrix ym(1, y.len());
    xm.data = x.data;
    ym.data = y.data;
    DenseMatrix hx = encode_x(p, xm);
    DenseMatrix hy = encode_y(p, ym);
    return pearson(hx.data.data(), hy.data.data(), p.k);
}

std::vector<bool> match_by_correlation(const CorrNetParams& p,
                                       const std::vector<std::pair<DenseVector, DenseVector>>& pairs,
                                       double threshold) {
    std::vector<bool> out;
    out.reserve(pairs.size());
    for (const auto& [x, y] : pairs)
        out.push_back(correlation_score(p, x, y) > threshold);
    return out;
}

PrecisionRecallF1 f1_score(const std::vector<bool>& predictions,
                           const std::vector<bool>& truth) {
    if (predictions.size() != truth.size()) throw DimensionError("f1: length mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] && truth[i]) ++tp;
        else if (predictions[i] && !truth[i]) ++fp;
        else if (!predictions[i] && truth[i]) ++fn;
    }
    PrecisionRecallF1 out;
    out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.f1 = out.precision + out.recall == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

double tune_threshold(const std::vector<std::pair<double, bool>>& scores) {
    std::size_t pos = 0;
    for (const auto& [s, label] : scores) pos += label ? 1 : 0;
    if (pos == 0 || pos == scores.size())
        throw ConfigError("tune_threshold: need at least one positive and one negative");

    std::vector<double> uniq;
    uniq.reserve(scores.size());
    for (const auto& [s, label] : scores) uniq.push_back(s);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 2)
        throw ConfigError("tune_threshold: all scores equal, no midpoint candidates");

    double best_threshold = 0.0, best_f1 = -1.0, best_precision = -1.0;
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
        double cand = 0.5 * (uniq[i] + uniq[i + 1]);
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& [s, label] : scores) {
            bool pred = s > cand;
            if (pred && label) ++tp;
            else if (pred && !label) ++fp;
            else if (!pred && label) ++fn;
        }
        double precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        double recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        bool better = f1 > best_f1 ||
                      (f1 == best_f1 && precision > best_precision) ||
                      (f1 == best_f1 && precision == best_precision && cand > best_threshold);
        if (better) {
            best_f1 = f1;
            best_precision = precision;
            best_threshold = cand;
        }
    }
    return best_threshold;
}

void write_pgm(const std::string& path, std::size_t rows, std::size_t cols,
               const double* data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("pgm: cannot open '" + path + "' for writing");
    out << "P5\n" << cols << " " << rows << "\n255\n";
    std::vector<unsigned char> bytes(rows * cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
        double v = std::clamp(data[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("pgm: write failed for '" + path + "'");
}

}  // namespace crlkit
