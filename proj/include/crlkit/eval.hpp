#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crlkit/classifier.hpp"
#include "crlkit/corrnet.hpp"
#include "crlkit/datasets.hpp"
#include "crlkit/train.hpp"

namespace crlkit {

struct EvalReport {
    std::optional<double> sum_correlation;
    std::optional<double> mse_self;
    std::optional<double> mse_cross;
    std::optional<double> transfer_l2r;  // percent
    std::optional<double> transfer_r2l;  // percent
    std::size_t folds = 0;
    std::map<std::string, std::string> metadata;

    std::string to_csv() const;   // header + one row
    std::string to_text() const;  // human-readable block
};

/// Sum over hidden dimensions of the per-dimension Pearson correlation
/// between matching columns of the two views' representations.
double sum_correlation(const DenseMatrix& Hx, const DenseMatrix& Hy);

/// Per-element MSEs with the left view as input: reconstructing x from
/// h(x), and y from h(x).
std::pair<double, double> reconstruction_mse(const CorrNetParams& p, const TwoViewBatch& batch);

/// Transfer protocol on precomputed representations: a classifier fit on
/// the training representations, evaluated on each of `folds` seeded folds
/// of the test set (refit per fold), mean accuracy in percent.
double transfer_accuracy_reps(const DenseMatrix& Htrain, const std::vector<int>& train_labels,
                              const DenseMatrix& Htest, const std::vector<int>& test_labels,
                              std::size_t folds, double l2, std::uint64_t seed);

/// Encodes the training data with one view's encoder and the test data with
/// the other view's encoder, then runs the folded protocol above.
double transfer_accuracy(const CorrNetParams& p, View train_view,
                         const DenseMatrix& train_view_data,
                         const std::vector<int>& train_labels,
                         const DenseMatrix& test_other_view_data,
                         const std::vector<int>& test_labels, std::size_t folds, double l2,
                         std::uint64_t seed);

struct AblationRow {
    LossTermMask mask;
    double transfer_l2r = 0.0;
    double transfer_r2l = 0.0;
};

/// One full train + transfer evaluation per mask, sharing seed and config.
std::vector<AblationRow> ablation_grid(const ViewedDataset& train_data, const ViewedDataset& test_data,
                                       const std::vector<LossTermMask>& masks,
                                       const TrainConfig& cfg, std::size_t k, Activation f,
                                       Activation g, ReconLoss loss, std::size_t folds,
                                       double l2);

/// Pearson correlation across the k coordinates of the pair's two
/// representations (k >= 2 required).
double correlation_score(const CorrNetParams& p, const DenseVector& x, const DenseVector& y);

std::vector<bool> match_by_correlation(const CorrNetParams& p,
                                       const std::vector<std::pair<DenseVector, DenseVector>>& pairs,
                                       double threshold);

/// Exhaustive scan over midpoints of sorted unique scores; returns the
/// argmax-F1 threshold, ties broken toward higher precision. Needs at least
/// one positive and one negative and at least two distinct scores.
double tune_threshold(const std::vector<std::pair<double, bool>>& scores);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

PrecisionRecallF1 f1_score(const std::vector<bool>& predictions,
                           const std::vector<bool>& truth);

/// P5 binary PGM, maxval 255; values are clamped to [0,1] then scaled.
void write_pgm(const std::string& path, std::size_t rows, std::size_t cols,
               const double* data);

}  // namespace crlkit
