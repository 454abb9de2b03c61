#pragma once

#include <vector>

#include "crlkit/corrnet.hpp"
#include "crlkit/train.hpp"

namespace crlkit {

struct DeepLayer {
    DenseMatrix W;  // out x in
    DenseVector b;  // out
};

/// Deep CorrNet built by stacking: per-view encoder pathways feeding a top
/// CorrNet, plus per-view decoder pathways taking the top's reconstruction
/// back to raw input space. layer_sizes lists hidden widths including the
/// top common layer, e.g. {500, 50}.
struct DeepCorrNet {
    std::vector<DeepLayer> x_stack, y_stack;  // raw -> top input
    CorrNetParams top;
    std::vector<DeepLayer> x_dec, y_dec;      // top output -> raw
    std::vector<std::size_t> layer_sizes;
    std::size_t raw_d1 = 0, raw_d2 = 0;
    Activation f_act = Activation::Sigmoid;
    Activation g_act = Activation::Sigmoid;
    ReconLoss recon_loss = ReconLoss::Squared;
};

inline constexpr std::size_t kDefaultMaxDepth = 4;

/// Decouples the trained shallow net's common layer into per-view pathway
/// layers (the shared bias is copied into both) and places a fresh CorrNet
/// with hidden size new_k on top. Decoder pathway layers are fresh
/// parameters of mirrored shape.
DeepCorrNet stack(const CorrNetParams& shallow, std::size_t new_k, Rng& rng,
                  std::size_t max_depth = kDefaultMaxDepth);

/// Stacks one more level onto an existing deep net.
DeepCorrNet stack(const DeepCorrNet& net, std::size_t new_k, Rng& rng,
                  std::size_t max_depth = kDefaultMaxDepth);

DenseMatrix encode_deep_x(const DeepCorrNet& net, const DenseMatrix& X);
DenseMatrix encode_deep_y(const DeepCorrNet& net, const DenseMatrix& Y);
DenseMatrix encode_deep_both(const DeepCorrNet& net, const DenseMatrix& X, const DenseMatrix& Y);
DenseMatrix encode_deep_view(const DeepCorrNet& net, View v, const DenseMatrix& data);

/// Full reconstruction from a top-layer hidden matrix back to raw inputs.
std::pair<DenseMatrix, DenseMatrix> decode_deep(const DeepCorrNet& net, const DenseMatrix& H);

struct DeepGrads {
    std::vector<DeepLayer> dx_stack, dy_stack, dx_dec, dy_dec;
    CorrNetGrads dtop;
};

/// Masked objective at the top common layer; reconstruction targets are the
/// raw inputs, decoded through the decoder pathways.
LossBreakdown deep_loss(const DeepCorrNet& net, const TwoViewBatch& batch,
                        const LossTermMask& mask);

std::pair<LossBreakdown, DeepGrads> deep_loss_grad(const DeepCorrNet& net,
                                                   const TwoViewBatch& batch,
                                                   const LossTermMask& mask);

struct DeepTrainResult {
    DeepCorrNet net;
    std::vector<LossBreakdown> epoch_log;
};

/// Joint fine-tuning of all layers on the masked objective. Set
/// freeze_pretrained to update only the top CorrNet and decoder pathways.
DeepTrainResult train_deep(DeepCorrNet net, const std::vector<TwoViewBatch>& two_view,
                           const TrainConfig& cfg, bool freeze_pretrained = false,
                           const TrainCallbacks& callbacks = {});

}  // namespace crlkit
