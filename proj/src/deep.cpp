#include "crlkit/deep.hpp"

#include <cmath>
#include <numeric>

#include "crlkit/common.hpp"

namespace crlkit {

namespace {

DeepLayer fresh_layer(std::size_t out, std::size_t in, Rng& rng) {
    DeepLayer l;
    l.W = DenseMatrix(out, in);
    double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& v : l.W.data) v = rng.uniform(-bound, bound);
    l.b = DenseVector(out, 0.0);
    return l;
}

void check_depth(std::size_t depth, std::size_t max_depth) {
    if (depth > max_depth)
        throw ConfigError("stack: depth " + std::to_string(depth) + " exceeds max_depth " +
                          std::to_string(max_depth));
}

// Forward through a pathway; returns all layer activations.
std::vector<DenseMatrix> forward_chain(const std::vector<DeepLayer>& layers, Activation act,
                                       const DenseMatrix& input) {
    std::vector<DenseMatrix> outs;
    const DenseMatrix* cur = &input;
    for (const DeepLayer& l : layers) {
        DenseMatrix pre = matmul_nt(*cur, l.W);
        add_row_broadcast(pre, l.b);
        activate_inplace(act, pre);
        outs.push_back(std::move(pre));
        cur = &outs.back();
    }
    return outs;
}

// Backward through a pathway. `acts` are forward_chain outputs; dOut is the
// gradient at the final activation. Accumulates layer grads, returns the
// gradient at the input.
DenseMatrix backward_chain(const std::vector<DeepLayer>& layers, Activation act,
                           const DenseMatrix& input, const std::vector<DenseMatrix>& acts,
                           DenseMatrix dOut, std::vector<DeepLayer>& grads) {
    for (std::size_t li = layers.size(); li-- > 0;) {
        const DenseMatrix& out = acts[li];
        const DenseMatrix& in = li == 0 ? input : acts[li - 1];
        DenseMatrix dPre(out.rows, out.cols);
        for (std::size_t i = 0; i < out.size(); ++i)
            dPre.data[i] = dOut.data[i] * activation_deriv_from_output(act, out.data[i]);
        add_inplace(grads[li].W, matmul_tn(dPre, in));
        DenseVector s = col_sums(dPre);
        for (std::size_t j = 0; j < s.len(); ++j) grads[li].b[j] += s[j];
        dOut = matmul(dPre, layers[li].W);
    }
    return dOut;
}

std::vector<DeepLayer> zero_like(const std::vector<DeepLayer>& layers) {
    std::vector<DeepLayer> out;
    out.reserve(layers.size());
    for (const DeepLayer& l : layers)
        out.push_back({DenseMatrix(l.W.rows, l.W.cols, 0.0), DenseVector(l.b.len(), 0.0)});
    return out;
}

}  // namespace

DeepCorrNet stack(const CorrNetParams& shallow, std::size_t new_k, Rng& rng,
                  std::size_t max_depth) {
    if (new_k < 1) throw DimensionError("stack: new_k must be >= 1");
    validate(shallow);
    check_depth(2, max_depth);
    DeepCorrNet net;
    net.raw_d1 = shallow.d1;
    net.raw_d2 = shallow.d2;
    net.f_act = shallow.f_act;
    net.g_act = shallow.g_act;
    net.recon_loss = shallow.recon_loss;
    // The shared bias b feeds both decoupled pathway layers.
    net.x_stack.push_back({shallow.W, shallow.b});
    net.y_stack.push_back({shallow.V, shallow.b});
    net.top = init_corrnet(new_k, shallow.k, shallow.k, shallow.f_act, shallow.g_act,
                           shallow.recon_loss, rng);
    net.x_dec.push_back(fresh_layer(shallow.d1, shallow.k, rng));
    net.y_dec.push_back(fresh_layer(shallow.d2, shallow.k, rng));
    net.layer_sizes = {shallow.k, new_k};
    return net;
}

DeepCorrNet stack(const DeepCorrNet& base, std::size_t new_k, Rng& rng, std::size_t max_depth) {
    if (new_k < 1) throw DimensionError("stack: new_k must be >= 1");
    check_depth(base.layer_sizes.size() + 1, max_depth);
    DeepCorrNet net = base;
    std::size_t old_k = base.top.k;
    std::size_t old_in = base.top.d1;  // == d2 by construction
    net.x_stack.push_back({base.top.W, base.top.b});
    net.y_stack.push_back({base.top.V, base.top.b});
    net.top = init_corrnet(new_k, old_k, old_k, base.f_act, base.g_act, base.recon_loss, rng);
    // New decode stage sits closest to the top; trained stages persist.
    net.x_dec.insert(net.x_dec.begin(), fresh_layer(old_in, old_k, rng));
    net.y_dec.insert(net.y_dec.begin(), fresh_layer(old_in, old_k, rng));
    net.layer_sizes.push_back(new_k);
    return net;
}

DenseMatrix encode_deep_x(const DeepCorrNet& net, const DenseMatrix& X) {
    std::vector<DenseMatrix> acts = forward_chain(net.x_stack, net.f_act, X);
    return encode_x(net.top, acts.back());
}

DenseMatrix encode_deep_y(const DeepCorrNet& net, const DenseMatrix& Y) {
    std::vector<DenseMatrix> acts = forward_chain(net.y_stack, net.f_act, Y);
    return encode_y(net.top, acts.back());
}

DenseMatrix encode_deep_both(const DeepCorrNet& net, const DenseMatrix& X,
                             const DenseMatrix& Y) {
    std::vector<DenseMatrix> ax = forward_chain(net.x_stack, net.f_act, X);
    std::vector<DenseMatrix> ay = forward_chain(net.y_stack, net.f_act, Y);
    return encode_both(net.top, ax.back(), ay.back());
}

DenseMatrix encode_deep_view(const DeepCorrNet& net, View v, const DenseMatrix& data) {
    return v == View::X ? encode_deep_x(net, data) : encode_deep_y(net, data);
}

std::pair<DenseMatrix, DenseMatrix> decode_deep(const DeepCorrNet& net, const DenseMatrix& H) {
    auto [ux, uy] = decode(net.top, H);
    std::vector<DenseMatrix> dx = forward_chain(net.x_dec, net.g_act, ux);
    std::vector<DenseMatrix> dy = forward_chain(net.y_dec, net.g_act, uy);
    return {dx.empty() ? std::move(ux) : std::move(dx.back()),
            dy.empty() ? std::move(uy) : std::move(dy.back())};
}

namespace {

// Shared forward state for deep loss/grad. The top CorrNet is applied to
// pathway outputs; each needed hidden path decodes through the top and then
// the decoder pathways to raw space.
struct DeepForward {
    std::vector<DenseMatrix> ax, ay;          // pathway activations
    DenseMatrix Hz, Hx, Hy;                   // top hiddens
    // Per path: top decode halves and decoder-pathway activations.
    DenseMatrix uz_x, uz_y, ux_x, ux_y, uy_x, uy_y;
    std::vector<DenseMatrix> rz_x, rz_y, rx_x, rx_y, ry_x, ry_y;
    bool need_z = false, need_x = false, need_y = false;
    bool dec_z = false, dec_x = false, dec_y = false;
};

double sse(const DenseMatrix& t, const DenseMatrix& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double d = t.data[i] - p.data[i];
        acc += d * d;
    }
    return acc;
}

double bce(const DenseMatrix& t, const DenseMatrix& p) {
    // Outputs of a sigmoid stay inside (0,1); clamp only guards exact ends.
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double v = std::min(std::max(p.data[i], 1e-12), 1.0 - 1e-12);
        acc += -(t.data[i] * std::log(v) + (1.0 - t.data[i]) * std::log(1.0 - v));
    }
    return acc;
}

double recon_loss_value(ReconLoss kind, const DenseMatrix& t, const DenseMatrix& p) {
    return kind == ReconLoss::Squared ? sse(t, p) : bce(t, p);
}

// Stabilized per-column correlation sum (same form as the shallow net).
struct DeepCorrStats {
    DenseVector mean_a, mean_b, cov, var_a, var_b, denom;
    double total = 0.0;
};

DeepCorrStats deep_corr_stats(const DenseMatrix& Ha, const DenseMatrix& Hb) {
    DeepCorrStats s;
    const std::size_t n = Ha.rows, k = Ha.cols;
    s.mean_a = col_means(Ha);
    s.mean_b = col_means(Hb);
    s.cov = DenseVector(k, 0.0);
    s.var_a = DenseVector(k, 0.0);
    s.var_b = DenseVector(k, 0.0);
    s.denom = DenseVector(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double da = Ha(i, j) - s.mean_a[j];
            double db = Hb(i, j) - s.mean_b[j];
            s.cov[j] += da * db;
            s.var_a[j] += da * da;
            s.var_b[j] += db * db;
        }
    for (std::size_t j = 0; j < k; ++j) {
        s.denom[j] = std::sqrt(s.var_a[j] * s.var_b[j] + kCorrEps);
        s.total += s.cov[j] / s.denom[j];
    }
    return s;
}

void deep_corr_backward(const DenseMatrix& Ha, const DenseMatrix& Hb, const DeepCorrStats& s,
                        double scale, DenseMatrix& dHa, DenseMatrix& dHb) {
    const std::size_t n = Ha.rows, k = Ha.cols;
    for (std::size_t j = 0; j < k; ++j) {
        double D = s.denom[j];
        double c_over_d2 = s.cov[j] / (D * D);
        double fa = c_over_d2 * s.var_b[j];
        double fb = c_over_d2 * s.var_a[j];
        for (std::size_t i = 0; i < n; ++i) {
            double da = Ha(i, j) - s.mean_a[j];
            double db = Hb(i, j) - s.mean_b[j];
            dHa(i, j) += scale * (db - fa * da) / D;
            dHb(i, j) += scale * (da - fb * db) / D;
        }
    }
}

void check_deep_batch(const DeepCorrNet& net, const TwoViewBatch& batch,
                      const LossTermMask& mask) {
    if (!mask.any()) throw ConfigError("loss term mask selects no terms");
    if (batch.X.cols != net.raw_d1 || batch.Y.cols != net.raw_d2)
        throw DimensionError("deep batch column counts do not match the network");
    if (batch.X.rows != batch.Y.rows) throw DimensionError("deep batch row counts differ");
    if (mask.l4 && batch.n() < 2)
        throw DimensionError("correlation term needs a batch of at least 2 rows");
}

DeepForward deep_forward(const DeepCorrNet& net, const TwoViewBatch& batch,
                         const LossTermMask& mask, LossBreakdown& out) {
    check_deep_batch(net, batch, mask);
    DeepForward st;
    st.need_z = mask.l1;
    st.dec_z = mask.l1;
    st.dec_x = mask.l2 || mask.l5 || mask.l7;
    st.dec_y = mask.l3 || mask.l6 || mask.l8;
    st.need_x = mask.l4 || st.dec_x;
    st.need_y = mask.l4 || st.dec_y;

    st.ax = forward_chain(net.x_stack, net.f_act, batch.X);
    st.ay = forward_chain(net.y_stack, net.f_act, batch.Y);
    const DenseMatrix& tx = st.ax.back();
    const DenseMatrix& ty = st.ay.back();

    if (st.need_z) st.Hz = encode_both(net.top, tx, ty);
    if (st.need_x) st.Hx = encode_x(net.top, tx);
    if (st.need_y) st.Hy = encode_y(net.top, ty);

    auto run_decode = [&](const DenseMatrix& H, DenseMatrix& ux, DenseMatrix& uy,
                          std::vector<DenseMatrix>& rx, std::vector<DenseMatrix>& ry) {
        auto [a, b] = decode(net.top, H);
        ux = std::move(a);
        uy = std::move(b);
        rx = forward_chain(net.x_dec, net.g_act, ux);
        ry = forward_chain(net.y_dec, net.g_act, uy);
    };
    if (st.dec_z) run_decode(st.Hz, st.uz_x, st.uz_y, st.rz_x, st.rz_y);
    if (st.dec_x) run_decode(st.Hx, st.ux_x, st.ux_y, st.rx_x, st.rx_y);
    if (st.dec_y) run_decode(st.Hy, st.uy_x, st.uy_y, st.ry_x, st.ry_y);

    auto xr = [&](const std::vector<DenseMatrix>& r, const DenseMatrix& u) -> const DenseMatrix& {
        return r.empty() ? u : r.back();
    };
    ReconLoss rl = net.recon_loss;
    if (mask.l1)
        out.l1 = recon_loss_value(rl, batch.X, xr(st.rz_x, st.uz_x)) +
                 recon_loss_value(rl, batch.Y, xr(st.rz_y, st.uz_y));
    if (mask.l2)
        out.l2 = recon_loss_value(rl, batch.X, xr(st.rx_x, st.ux_x)) +
                 recon_loss_value(rl, batch.Y, xr(st.rx_y, st.ux_y));
    if (mask.l3)
        out.l3 = recon_loss_value(rl, batch.X, xr(st.ry_x, st.uy_x)) +
                 recon_loss_value(rl, batch.Y, xr(st.ry_y, st.uy_y));
    if (mask.l5) out.l5 = recon_loss_value(rl, batch.Y, xr(st.rx_y, st.ux_y));
    if (mask.l6) out.l6 = recon_loss_value(rl, batch.X, xr(st.ry_x, st.uy_x));
    if (mask.l7) out.l7 = recon_loss_value(rl, batch.X, xr(st.rx_x, st.ux_x));
    if (mask.l8) out.l8 = recon_loss_value(rl, batch.Y, xr(st.ry_y, st.uy_y));

    double total = 0.0;
    for (int t : {1, 2, 3, 5, 6, 7, 8})
        if (auto v = out.term(t)) total += *v;
    if (mask.l4) {
        DeepCorrStats cs = deep_corr_stats(st.Hx, st.Hy);
        out.corr_value = cs.total;
        out.l4 = mask.lambda * cs.total;
        total -= *out.l4;
    }
    out.total = total;
    return st;
}

}  // namespace

LossBreakdown deep_loss(const DeepCorrNet& net, const TwoViewBatch& batch,
                        const LossTermMask& mask) {
    LossBreakdown out;
    deep_forward(net, batch, mask, out);
    return out;
}

std::pair<LossBreakdown, DeepGrads> deep_loss_grad(const DeepCorrNet& net,
                                                   const TwoViewBatch& batch,
                                                   const LossTermMask& mask) {
    LossBreakdown out;
    DeepForward st = deep_forward(net, batch, mask, out);

    DeepGrads g;
    g.dx_stack = zero_like(net.x_stack);
    g.dy_stack = zero_like(net.y_stack);
    g.dx_dec = zero_like(net.x_dec);
    g.dy_dec = zero_like(net.y_dec);
    g.dtop = zero_grads(net.top);

    const DenseMatrix& tx = st.ax.back();
    const DenseMatrix& ty = st.ay.back();
    DenseMatrix dtx(tx.rows, tx.cols, 0.0);
    DenseMatrix dty(ty.rows, ty.cols, 0.0);

    // d(loss)/d(prediction) -> d/d(pre-activation) for a decoder output.
    auto d_out = [&](const DenseMatrix& target, const DenseMatrix& pred, double coeff) {
        DenseMatrix dP(pred.rows, pred.cols);
        if (net.recon_loss == ReconLoss::Squared) {
            for (std::size_t i = 0; i < pred.size(); ++i)
                dP.data[i] = coeff * 2.0 * (pred.data[i] - target.data[i]);
        } else {
            for (std::size_t i = 0; i < pred.size(); ++i) {
                double v = std::min(std::max(pred.data[i], 1e-12), 1.0 - 1e-12);
                dP.data[i] = coeff * (v - target.data[i]) / (v * (1.0 - v));
            }
        }
        return dP;
    };

    // Backprop one decode path (top decode + decoder pathways) given target
    // multiplicities cx, cy; returns dH at the top hidden.
    auto back_path = [&](const DenseMatrix& H, const DenseMatrix& ux, const DenseMatrix& uy,
                         const std::vector<DenseMatrix>& rx, const std::vector<DenseMatrix>& ry,
                         double cx, double cy) {
        DenseMatrix dux(ux.rows, ux.cols, 0.0), duy(uy.rows, uy.cols, 0.0);
        if (cx > 0) {
            const DenseMatrix& pred = rx.empty() ? ux : rx.back();
            DenseMatrix dP = d_out(batch.X, pred, cx);
            dux = backward_chain(net.x_dec, net.g_act, ux, rx, std::move(dP), g.dx_dec);
        }
        if (cy > 0) {
            const DenseMatrix& pred = ry.empty() ? uy : ry.back();
            DenseMatrix dP = d_out(batch.Y, pred, cy);
            duy = backward_chain(net.y_dec, net.g_act, uy, ry, std::move(dP), g.dy_dec);
        }
        // Through the top decoder: ux = g(H Wp^T + bp_x), uy likewise.
        DenseMatrix dH(H.rows, H.cols, 0.0);
        if (cx > 0) {
            DenseMatrix dS(dux.rows, dux.cols);
            for (std::size_t i = 0; i < dux.size(); ++i)
                dS.data[i] = dux.data[i] * activation_deriv_from_output(net.g_act, ux.data[i]);
            add_inplace(g.dtop.dWp, matmul_tn(dS, H));
            DenseVector s = col_sums(dS);
            for (std::size_t i = 0; i < net.top.d1; ++i) g.dtop.dbp[i] += s[i];
            add_inplace(dH, matmul(dS, net.top.Wp));
        }
        if (cy > 0) {
            DenseMatrix dS(duy.rows, duy.cols);
            for (std::size_t i = 0; i < duy.size(); ++i)
                dS.data[i] = duy.data[i] * activation_deriv_from_output(net.g_act, uy.data[i]);
            add_inplace(g.dtop.dVp, matmul_tn(dS, H));
            DenseVector s = col_sums(dS);
            for (std::size_t i = 0; i < net.top.d2; ++i) g.dtop.dbp[net.top.d1 + i] += s[i];
            add_inplace(dH, matmul(dS, net.top.Vp));
        }
        return dH;
    };

    double cz_x = mask.l1 ? 1.0 : 0.0, cz_y = mask.l1 ? 1.0 : 0.0;
    double cx_x = (mask.l2 ? 1.0 : 0.0) + (mask.l7 ? 1.0 : 0.0);
    double cx_y = (mask.l2 ? 1.0 : 0.0) + (mask.l5 ? 1.0 : 0.0);
    double cy_x = (mask.l3 ? 1.0 : 0.0) + (mask.l6 ? 1.0 : 0.0);
    double cy_y = (mask.l3 ? 1.0 : 0.0) + (mask.l8 ? 1.0 : 0.0);

    DenseMatrix dHz, dHx, dHy;
    if (st.need_z) dHz = DenseMatrix(st.Hz.rows, st.Hz.cols, 0.0);
    if (st.need_x) dHx = DenseMatrix(st.Hx.rows, st.Hx.cols, 0.0);
    if (st.need_y) dHy = DenseMatrix(st.Hy.rows, st.Hy.cols, 0.0);

    if (st.dec_z)
        add_inplace(dHz, back_path(st.Hz, st.uz_x, st.uz_y, st.rz_x, st.rz_y, cz_x, cz_y));
    if (st.dec_x)
        add_inplace(dHx, back_path(st.Hx, st.ux_x, st.ux_y, st.rx_x, st.rx_y, cx_x, cx_y));
    if (st.dec_y)
        add_inplace(dHy, back_path(st.Hy, st.uy_x, st.uy_y, st.ry_x, st.ry_y, cy_x, cy_y));

    if (mask.l4) {
        DeepCorrStats cs = deep_corr_stats(st.Hx, st.Hy);
        deep_corr_backward(st.Hx, st.Hy, cs, -mask.lambda, dHx, dHy);
    }

    // Top encode backprop into pathway outputs.
    auto back_top_encode = [&](const DenseMatrix& H, const DenseMatrix& dH, bool with_x,
                               bool with_y) {
        DenseMatrix dPre(H.rows, H.cols);
        for (std::size_t i = 0; i < H.size(); ++i)
            dPre.data[i] = dH.data[i] * activation_deriv_from_output(net.f_act, H.data[i]);
        if (with_x) {
            add_inplace(g.dtop.dW, matmul_tn(dPre, tx));
            add_inplace(dtx, matmul(dPre, net.top.W));
        }
        if (with_y) {
            add_inplace(g.dtop.dV, matmul_tn(dPre, ty));
            add_inplace(dty, matmul(dPre, net.top.V));
        }
        DenseVector s = col_sums(dPre);
        for (std::size_t j = 0; j < net.top.k; ++j) g.dtop.db[j] += s[j];
    };
    if (st.need_z) back_top_encode(st.Hz, dHz, true, true);
    if (st.need_x) back_top_encode(st.Hx, dHx, true, false);
    if (st.need_y) back_top_encode(st.Hy, dHy, false, true);

    backward_chain(net.x_stack, net.f_act, batch.X, st.ax, std::move(dtx), g.dx_stack);
    backward_chain(net.y_stack, net.f_act, batch.Y, st.ay, std::move(dty), g.dy_stack);

    return {out, std::move(g)};
}

namespace {

ParamArrays collect_layer_arrays(std::vector<DeepLayer>& layers) {
    ParamArrays out;
    for (DeepLayer& l : layers) {
        out.push_back({l.W.data.data(), l.W.size()});
        out.push_back({l.b.data.data(), l.b.len()});
    }
    return out;
}

ParamArrays collect_deep_arrays(DeepCorrNet& net, bool include_pretrained) {
    ParamArrays out;
    if (include_pretrained) {
        auto xs = collect_layer_arrays(net.x_stack);
        auto ys = collect_layer_arrays(net.y_stack);
        out.insert(out.end(), xs.begin(), xs.end());
        out.insert(out.end(), ys.begin(), ys.end());
    }
    auto top = collect_arrays(net.top);
    out.insert(out.end(), top.begin(), top.end());
    auto xd = collect_layer_arrays(net.x_dec);
    auto yd = collect_layer_arrays(net.y_dec);
    out.insert(out.end(), xd.begin(), xd.end());
    out.insert(out.end(), yd.begin(), yd.end());
    return out;
}

ParamArrays collect_deep_grad_arrays(DeepGrads& g, bool include_pretrained) {
    ParamArrays out;
    if (include_pretrained) {
        auto xs = collect_layer_arrays(g.dx_stack);
        auto ys = collect_layer_arrays(g.dy_stack);
        out.insert(out.end(), xs.begin(), xs.end());
        out.insert(out.end(), ys.begin(), ys.end());
    }
    auto top = collect_arrays(g.dtop);
    out.insert(out.end(), top.begin(), top.end());
    auto xd = collect_layer_arrays(g.dx_dec);
    auto yd = collect_layer_arrays(g.dy_dec);
    out.insert(out.end(), xd.begin(), xd.end());
    out.insert(out.end(), yd.begin(), yd.end());
    return out;
}

void check_finite(const LossBreakdown& lb) {
    for (int t : {1, 2, 3, 4, 5, 6, 7, 8})
        if (auto v = lb.term(t); v && !std::isfinite(*v))
            throw NumericError("training diverged: loss term L" + std::to_string(t) +
                               " is non-finite");
    if (!std::isfinite(lb.total))
        throw NumericError("training diverged: total loss is non-finite");
}

}  // namespace

DeepTrainResult train_deep(DeepCorrNet net, const std::vector<TwoViewBatch>& two_view,
                           const TrainConfig& cfg, bool freeze_pretrained,
                           const TrainCallbacks& callbacks) {
    const LossTermMask mask = cfg.effective_mask();
    Rng rng = Rng(cfg.seed);
    RmsPropState st;
    DeepTrainResult result;
    std::size_t step = 0;

    std::vector<std::size_t> order(two_view.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = rng.split(epoch);
        erng.shuffle(order);
        LossBreakdown epoch_sum;
        std::size_t count = 0;
        for (std::size_t idx : order) {
            const TwoViewBatch& batch = two_view[idx];
            LossTermMask bmask = mask;
            if (bmask.l4 && batch.n() < 2) bmask.l4 = false;
            auto [lb, grads] = deep_loss_grad(net, batch, bmask);
            check_finite(lb);
            double inv_n = 1.0 / static_cast<double>(batch.n());
            for (auto& [ptr, len] : collect_deep_grad_arrays(grads, !freeze_pretrained))
                for (std::size_t i = 0; i < len; ++i) ptr[i] *= inv_n;
            ParamArrays params = collect_deep_arrays(net, !freeze_pretrained);
            ParamArrays garr = collect_deep_grad_arrays(grads, !freeze_pretrained);
            if (cfg.optimizer == OptimizerKind::Sgd) {
                sgd_step_arrays(params, garr, cfg.learning_rate);
            } else {
                rmsprop_step_arrays(params, garr, st, cfg.learning_rate, cfg.rmsprop_decay,
                                    cfg.rmsprop_eps);
            }
            if (callbacks.on_update) callbacks.on_update({epoch, step, bmask, lb.total});
            ++step;
            // Accumulate epoch means.
            auto acc = [](std::optional<double>& into, const std::optional<double>& v) {
                if (v) into = into.value_or(0.0) + *v;
            };
            acc(epoch_sum.l1, lb.l1); acc(epoch_sum.l2, lb.l2); acc(epoch_sum.l3, lb.l3);
            acc(epoch_sum.l4, lb.l4); acc(epoch_sum.l5, lb.l5); acc(epoch_sum.l6, lb.l6);
            acc(epoch_sum.l7, lb.l7); acc(epoch_sum.l8, lb.l8);
            acc(epoch_sum.corr_value, lb.corr_value);
            epoch_sum.total += lb.total;
            ++count;
        }
        if (count > 0) {
            double inv = 1.0 / static_cast<double>(count);
            auto div = [&](std::optional<double>& v) {
                if (v) v = *v * inv;
            };
            div(epoch_sum.l1); div(epoch_sum.l2); div(epoch_sum.l3); div(epoch_sum.l4);
            div(epoch_sum.l5); div(epoch_sum.l6); div(epoch_sum.l7); div(epoch_sum.l8);
            div(epoch_sum.corr_value);
            epoch_sum.total *= inv;
        }
        if (callbacks.on_epoch) callbacks.on_epoch(epoch, epoch_sum);
        result.epoch_log.push_back(epoch_sum);
    }
    result.net = std::move(net);
    return result;
}

}  // namespace crlkit
