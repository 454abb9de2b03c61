#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crlkit/corrnet.hpp"

namespace crlkit {

enum class OptimizerKind { Sgd, RmsProp };

OptimizerKind optimizer_from_name(const std::string& name);
std::string optimizer_name(OptimizerKind o);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 100;
    double learning_rate = 0.01;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double rmsprop_decay = 0.9;
    double rmsprop_eps = 1e-6;
    double lambda = 0.0;
    LossTermMask mask = LossTermMask::corrnet(0.0);
    std::uint64_t seed = 0;
    std::size_t merge_factor = 1;

    /// mask with lambda overridden by this config's lambda.
    LossTermMask effective_mask() const;
};

struct SingleViewBatch {
    View view = View::X;
    DenseMatrix data;
};

struct UpdateEvent {
    std::size_t epoch = 0;
    std::size_t step = 0;  // update counter within the run
    LossTermMask mask;
    double total = 0.0;
};

struct TrainCallbacks {
    std::function<void(std::size_t epoch, const LossBreakdown&)> on_epoch;
    std::function<void(const UpdateEvent&)> on_update;
    std::function<void(const std::string&)> on_warn;  // defaults to stderr
};

struct TrainResult {
    CorrNetParams params;
    std::vector<LossBreakdown> epoch_log;  // per-epoch mean over batches
};

/// Slices (X, Y) into consecutive mini-batches; the trailing partial batch
/// is kept.
std::vector<TwoViewBatch> make_batches(const DenseMatrix& X, const DenseMatrix& Y,
                                       std::size_t batch_size);
std::vector<SingleViewBatch> make_single_batches(View v, const DenseMatrix& data,
                                                 std::size_t batch_size);

/// Mini-batch training on the masked objective. Batch order is reshuffled
/// each epoch from cfg.seed; updates use the batch gradient divided by the
/// batch row count. Deterministic given (config, seed, data). Throws
/// NumericError naming the offending term if the loss goes non-finite.
TrainResult train(CorrNetParams p, const std::vector<TwoViewBatch>& two_view,
                  const TrainConfig& cfg, const TrainCallbacks& callbacks = {});

/// Three-stream training: two-view batches step on the masked objective,
/// x-only batches on L(x, g(h(x))), y-only batches on L(y, g(h(y))).
/// Whole batches from the three streams are interleaved in a seed-determined
/// random order each epoch.
TrainResult train_mixed(CorrNetParams p, const std::vector<TwoViewBatch>& two_view,
                        const std::vector<SingleViewBatch>& x_only,
                        const std::vector<SingleViewBatch>& y_only, const TrainConfig& cfg,
                        const TrainCallbacks& callbacks = {});

/// Multimodal autoencoder schedule: per mini-batch, three successive
/// updates on L2 alone, then L3 alone, then L1 alone.
TrainResult train_mae(CorrNetParams p, const std::vector<TwoViewBatch>& two_view,
                      const TrainConfig& cfg, const TrainCallbacks& callbacks = {});

/// Combines consecutive groups of merge_factor rows by elementwise maximum
/// (binary bag-of-words union); a trailing partial group is kept as-is.
TwoViewBatch merge_bow(const TwoViewBatch& batch, std::size_t merge_factor);
DenseMatrix merge_rows_max(const DenseMatrix& m, std::size_t merge_factor);

// ---- optimizer steps ----

/// Pointers into a model's parameter (or gradient) storage.
using ParamArrays = std::vector<std::pair<double*, std::size_t>>;

ParamArrays collect_arrays(CorrNetParams& p);
ParamArrays collect_arrays(CorrNetGrads& g);

struct RmsPropState {
    std::vector<std::vector<double>> accum;  // one slot per parameter array
};

void sgd_step_arrays(const ParamArrays& params, const ParamArrays& grads, double lr);

/// s <- rho*s + (1-rho)*g^2 ; theta <- theta - lr*g/sqrt(s+eps), elementwise.
void rmsprop_step_arrays(const ParamArrays& params, const ParamArrays& grads, RmsPropState& st,
                         double lr, double rho, double eps);

/// RMSProp update for a whole parameter set; state is allocated lazily on
/// first use and must keep matching shapes afterwards.
void rmsprop_step(CorrNetParams& p, const CorrNetGrads& g, RmsPropState& st,
                  const TrainConfig& cfg);

}  // namespace crlkit
