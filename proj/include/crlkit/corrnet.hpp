#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "crlkit/activation.hpp"
#include "crlkit/matrix.hpp"
#include "crlkit/rng.hpp"

namespace crlkit {

enum class ReconLoss { Squared, CrossEntropy };

ReconLoss recon_loss_from_name(const std::string& name);
std::string recon_loss_name(ReconLoss l);

/// Stabilizer added inside the square root of correlation denominators
/// wherever the correlation term is differentiated.
inline constexpr double kCorrEps = 1e-8;

/// Two-view autoencoder parameters.
///
/// Encoding of a pair (x, y) is f(W x + V y + b); single-view encodings set
/// the missing view to zero. Decoding from a hidden vector h produces
/// (g(W' h + b'[0..d1)), g(V' h + b'[d1..d1+d2))).
struct CorrNetParams {
    std::size_t k = 0, d1 = 0, d2 = 0;
    DenseMatrix W;    // k x d1
    DenseMatrix V;    // k x d2
    DenseVector b;    // k
    DenseMatrix Wp;   // d1 x k
    DenseMatrix Vp;   // d2 x k
    DenseVector bp;   // d1 + d2
    Activation f_act = Activation::Sigmoid;
    Activation g_act = Activation::Sigmoid;
    ReconLoss recon_loss = ReconLoss::Squared;
};

/// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
CorrNetParams init_corrnet(std::size_t k, std::size_t d1, std::size_t d2, Activation f,
                           Activation g, ReconLoss loss, Rng& rng);

/// Checks dimensional consistency; cross-entropy additionally requires a
/// sigmoid output activation so predictions stay in (0,1).
void validate(const CorrNetParams& p);

struct TwoViewBatch {
    DenseMatrix X;  // n x d1
    DenseMatrix Y;  // n x d2
    std::size_t n() const { return X.rows; }
};

/// Which loss terms are active, and the correlation weight lambda.
///
/// L1: L(z, g(h(z)))   L2: L(z, g(h(x)))   L3: L(z, g(h(y)))
/// L4: lambda * corr(h(X), h(Y))
/// L5: L(y, g(h(x)))   L6: L(x, g(h(y)))   L7: L(x, g(h(x)))   L8: L(y, g(h(y)))
struct LossTermMask {
    bool l1 = false, l2 = false, l3 = false, l4 = false;
    bool l5 = false, l6 = false, l7 = false, l8 = false;
    double lambda = 0.0;

    static LossTermMask corrnet(double lambda);     // L1+L2+L3+L4
    static LossTermMask corrnet123();               // L1+L2+L3
    static LossTermMask single(int term, double lambda = 0.0);
    static LossTermMask from_names(const std::string& names, double lambda);  // "L1,L2,..."

    bool any() const { return l1 || l2 || l3 || l4 || l5 || l6 || l7 || l8; }
    bool term(int i) const;
    std::string to_string() const;  // e.g. "L1+L2+L3+L4"
};

struct LossBreakdown {
    std::optional<double> l1, l2, l3, l4, l5, l6, l7, l8;
    std::optional<double> corr_value;  // engaged iff L4 active
    double total = 0.0;

    std::optional<double> term(int i) const;
};

DenseMatrix encode_both(const CorrNetParams& p, const DenseMatrix& X, const DenseMatrix& Y);
DenseMatrix encode_x(const CorrNetParams& p, const DenseMatrix& X);
DenseMatrix encode_y(const CorrNetParams& p, const DenseMatrix& Y);
DenseMatrix encode_view(const CorrNetParams& p, View v, const DenseMatrix& data);

std::pair<DenseMatrix, DenseMatrix> decode(const CorrNetParams& p, const DenseMatrix& H);

/// Objective of the masked terms on one batch. total = sum of active
/// reconstruction terms minus lambda * corr_value when L4 is active. The
/// correlation value here carries the kCorrEps stabilizer so the objective
/// stays differentiable at constant hidden columns.
LossBreakdown corrnet_loss(const CorrNetParams& p, const TwoViewBatch& batch,
                           const LossTermMask& mask);

/// Gradient of corrnet_loss(...).total with the shape of the parameters.
struct CorrNetGrads {
    DenseMatrix dW, dV, dWp, dVp;
    DenseVector db, dbp;
};

CorrNetGrads corrnet_grad(const CorrNetParams& p, const TwoViewBatch& batch,
                          const LossTermMask& mask);

/// Loss and gradient sharing one forward pass.
std::pair<LossBreakdown, CorrNetGrads> corrnet_loss_grad(const CorrNetParams& p,
                                                         const TwoViewBatch& batch,
                                                         const LossTermMask& mask);

CorrNetGrads zero_grads(const CorrNetParams& p);

}  // namespace crlkit
