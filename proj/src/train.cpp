#include "crlkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "crlkit/rng.hpp"

namespace crlkit {

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "rmsprop") return OptimizerKind::RmsProp;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd|rmsprop)");
}

std::string optimizer_name(OptimizerKind o) {
    return o == OptimizerKind::Sgd ? "sgd" : "rmsprop";
}

LossTermMask TrainConfig::effective_mask() const {
    LossTermMask m = mask;
    m.lambda = lambda;
    return m;
}

std::vector<TwoViewBatch> make_batches(const DenseMatrix& X, const DenseMatrix& Y,
                                       std::size_t batch_size) {
    if (X.rows != Y.rows) throw DimensionError("make_batches: row count mismatch");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    std::vector<TwoViewBatch> out;
    for (std::size_t r0 = 0; r0 < X.rows; r0 += batch_size) {
        std::size_t r1 = std::min(X.rows, r0 + batch_size);
        out.push_back({slice_rows(X, r0, r1), slice_rows(Y, r0, r1)});
    }
    return out;
}

std::vector<SingleViewBatch> make_single_batches(View v, const DenseMatrix& data,
                                                 std::size_t batch_size) {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    std::vector<SingleViewBatch> out;
    for (std::size_t r0 = 0; r0 < data.rows; r0 += batch_size) {
        std::size_t r1 = std::min(data.rows, r0 + batch_size);
        out.push_back({v, slice_rows(data, r0, r1)});
    }
    return out;
}

DenseMatrix merge_rows_max(const DenseMatrix& m, std::size_t merge_factor) {
    if (merge_factor < 1) throw ConfigError("merge_factor must be >= 1");
    if (merge_factor == 1) return m;
    std::size_t groups = (m.rows + merge_factor - 1) / merge_factor;
    DenseMatrix out(groups, m.cols);
    for (std::size_t gidx = 0; gidx < groups; ++gidx) {
        std::size_t r0 = gidx * merge_factor;
        std::size_t r1 = std::min(m.rows, r0 + merge_factor);
        for (std::size_t c = 0; c < m.cols; ++c) {
            double v = m(r0, c);
            for (std::size_t r = r0 + 1; r < r1; ++r) v = std::max(v, m(r, c));
            out(gidx, c) = v;
        }
    }
    return out;
}

TwoViewBatch merge_bow(const TwoViewBatch& batch, std::size_t merge_factor) {
    return {merge_rows_max(batch.X, merge_factor), merge_rows_max(batch.Y, merge_factor)};
}

ParamArrays collect_arrays(CorrNetParams& p) {
    return {{p.W.data.data(), p.W.size()},   {p.V.data.data(), p.V.size()},
            {p.b.data.data(), p.b.len()},    {p.Wp.data.data(), p.Wp.size()},
            {p.Vp.data.data(), p.Vp.size()}, {p.bp.data.data(), p.bp.len()}};
}

ParamArrays collect_arrays(CorrNetGrads& g) {
    return {{g.dW.data.data(), g.dW.size()},   {g.dV.data.data(), g.dV.size()},
            {g.db.data.data(), g.db.len()},    {g.dWp.data.data(), g.dWp.size()},
            {g.dVp.data.data(), g.dVp.size()}, {g.dbp.data.data(), g.dbp.len()}};
}

void sgd_step_arrays(const ParamArrays& params, const ParamArrays& grads, double lr) {
    for (std::size_t a = 0; a < params.size(); ++a) {
        double* p = params[a].first;
        const double* g = grads[a].first;
        for (std::size_t i = 0; i < params[a].second; ++i) p[i] -= lr * g[i];
    }
}

void rmsprop_step_arrays(const ParamArrays& params, const ParamArrays& grads, RmsPropState& st,
                         double lr, double rho, double eps) {
    if (st.accum.empty()) {
        st.accum.resize(params.size());
        for (std::size_t a = 0; a < params.size(); ++a)
            st.accum[a].assign(params[a].second, 0.0);
    }
    if (st.accum.size() != params.size())
        throw DimensionError("rmsprop state does not match parameter arrays");
    for (std::size_t a = 0; a < params.size(); ++a) {
        if (st.accum[a].size() != params[a].second)
            throw DimensionError("rmsprop state does not match parameter shapes");
        double* p = params[a].first;
        const double* g = grads[a].first;
        double* s = st.accum[a].data();
        for (std::size_t i = 0; i < params[a].second; ++i) {
            s[i] = rho * s[i] + (1.0 - rho) * g[i] * g[i];
            p[i] -= lr * g[i] / std::sqrt(s[i] + eps);
        }
    }
}

void rmsprop_step(CorrNetParams& p, const CorrNetGrads& g, RmsPropState& st,
                  const TrainConfig& cfg) {
    CorrNetGrads gm = g;
    rmsprop_step_arrays(collect_arrays(p), collect_arrays(gm), st, cfg.learning_rate,
                        cfg.rmsprop_decay, cfg.rmsprop_eps);
}

namespace {

void default_warn(const TrainCallbacks& cb, const std::string& msg) {
    if (cb.on_warn) {
        cb.on_warn(msg);
    } else {
        std::fprintf(stderr, "[crlkit] warning: %s\n", msg.c_str());
    }
}

void check_finite_loss(const LossBreakdown& lb) {
    for (int t : {1, 2, 3, 4, 5, 6, 7, 8}) {
        if (auto v = lb.term(t); v && !std::isfinite(*v))
            throw NumericError("training diverged: loss term L" + std::to_string(t) +
                               " is non-finite");
    }
    if (!std::isfinite(lb.total))
        throw NumericError("training diverged: total loss is non-finite");
}

struct EpochAccumulator {
    LossBreakdown sum;
    std::size_t count = 0;

    void add(const LossBreakdown& lb) {
        auto acc = [](std::optional<double>& into, const std::optional<double>& v) {
            if (v) into = into.value_or(0.0) + *v;
        };
        acc(sum.l1, lb.l1); acc(sum.l2, lb.l2); acc(sum.l3, lb.l3); acc(sum.l4, lb.l4);
        acc(sum.l5, lb.l5); acc(sum.l6, lb.l6); acc(sum.l7, lb.l7); acc(sum.l8, lb.l8);
        acc(sum.corr_value, lb.corr_value);
        sum.total += lb.total;
        ++count;
    }

    LossBreakdown mean() const {
        LossBreakdown m = sum;
        if (count == 0) return m;
        double inv = 1.0 / static_cast<double>(count);
        auto div = [&](std::optional<double>& v) {
            if (v) v = *v * inv;
        };
        div(m.l1); div(m.l2); div(m.l3); div(m.l4);
        div(m.l5); div(m.l6); div(m.l7); div(m.l8);
        div(m.corr_value);
        m.total *= inv;
        return m;
    }
};

// One gradient update on `batch` with `mask`; gradient is normalized by the
// batch row count. Returns the batch loss.
LossBreakdown update_once(CorrNetParams& p, const TwoViewBatch& batch, const LossTermMask& mask,
                          const TrainConfig& cfg, RmsPropState& st) {
    auto [lb, grads] = corrnet_loss_grad(p, batch, mask);
    check_finite_loss(lb);
    double inv_n = 1.0 / static_cast<double>(batch.n());
    CorrNetGrads gm = std::move(grads);
    for (auto& [ptr, len] : collect_arrays(gm))
        for (std::size_t i = 0; i < len; ++i) ptr[i] *= inv_n;
    if (cfg.optimizer == OptimizerKind::Sgd) {
        sgd_step_arrays(collect_arrays(p), collect_arrays(gm), cfg.learning_rate);
    } else {
        rmsprop_step_arrays(collect_arrays(p), collect_arrays(gm), st, cfg.learning_rate,
                            cfg.rmsprop_decay, cfg.rmsprop_eps);
    }
    return lb;
}

// Drops L4 from the mask for batches too small to carry a correlation.
LossTermMask mask_for_batch(const LossTermMask& mask, std::size_t n, bool& warned,
                            const TrainCallbacks& cb) {
    if (!mask.l4 || n >= 2) return mask;
    LossTermMask m = mask;
    m.l4 = false;
    if (!m.any())
        throw ConfigError("batch of size 1 with a correlation-only mask cannot be trained");
    if (!warned) {
        default_warn(cb, "batch of size 1: correlation term skipped for this batch");
        warned = true;
    }
    return m;
}

}  // namespace

namespace {

void check_config(const TrainConfig& cfg, const LossTermMask& mask) {
    if (mask.l4 && cfg.batch_size < 2)
        throw ConfigError("batch_size must be >= 2 when the correlation term is active");
    if (cfg.learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
    if (cfg.merge_factor < 1) throw ConfigError("merge_factor must be >= 1");
}

}  // namespace

TrainResult train(CorrNetParams p, const std::vector<TwoViewBatch>& two_view,
                  const TrainConfig& cfg, const TrainCallbacks& callbacks) {
    validate(p);
    const LossTermMask mask = cfg.effective_mask();
    check_config(cfg, mask);
    Rng rng = Rng(cfg.seed);
    RmsPropState st;
    TrainResult result;
    bool warned = false;
    std::size_t step = 0;

    std::vector<std::size_t> order(two_view.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = rng.split(epoch);
        erng.shuffle(order);
        EpochAccumulator acc;
        for (std::size_t idx : order) {
            TwoViewBatch merged;
            const TwoViewBatch* batch = &two_view[idx];
            if (cfg.merge_factor > 1) {
                merged = merge_bow(*batch, cfg.merge_factor);
                batch = &merged;
            }
            LossTermMask bmask = mask_for_batch(mask, batch->n(), warned, callbacks);
            LossBreakdown lb = update_once(p, *batch, bmask, cfg, st);
            acc.add(lb);
            if (callbacks.on_update) callbacks.on_update({epoch, step, bmask, lb.total});
            ++step;
        }
        LossBreakdown mean = acc.mean();
        if (callbacks.on_epoch) callbacks.on_epoch(epoch, mean);
        result.epoch_log.push_back(mean);
    }
    result.params = std::move(p);
    return result;
}

TrainResult train_mixed(CorrNetParams p, const std::vector<TwoViewBatch>& two_view,
                        const std::vector<SingleViewBatch>& x_only,
                        const std::vector<SingleViewBatch>& y_only, const TrainConfig& cfg,
                        const TrainCallbacks& callbacks) {
    validate(p);
    const LossTermMask mask = cfg.effective_mask();
    check_config(cfg, mask);
    // J_X and J_Y are plain self-reconstruction of the present view.
    const LossTermMask x_mask = LossTermMask::single(7);
    const LossTermMask y_mask = LossTermMask::single(8);

    struct Entry {
        int kind;  // 0 = two-view, 1 = x-only, 2 = y-only
        std::size_t idx;
    };
    std::vector<Entry> schedule;
    for (std::size_t i = 0; i < two_view.size(); ++i) schedule.push_back({0, i});
    for (std::size_t i = 0; i < x_only.size(); ++i) schedule.push_back({1, i});
    for (std::size_t i = 0; i < y_only.size(); ++i) schedule.push_back({2, i});

    Rng rng = Rng(cfg.seed);
    RmsPropState st;
    TrainResult result;
    bool warned = false;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = rng.split(epoch);
        erng.shuffle(schedule);
        EpochAccumulator acc;
        for (const Entry& e : schedule) {
            TwoViewBatch storage;
            const TwoViewBatch* batch = nullptr;
            LossTermMask bmask;
            if (e.kind == 0) {
                batch = &two_view[e.idx];
                if (cfg.merge_factor > 1) {
                    storage = merge_bow(*batch, cfg.merge_factor);
                    batch = &storage;
                }
                bmask = mask_for_batch(mask, batch->n(), warned, callbacks);
            } else {
                const SingleViewBatch& sv = e.kind == 1 ? x_only[e.idx] : y_only[e.idx];
                DenseMatrix data = cfg.merge_factor > 1
                                       ? merge_rows_max(sv.data, cfg.merge_factor)
                                       : sv.data;
                // The absent view is a zero block; its gradient path stays zero.
                if (sv.view == View::X) {
                    storage = {std::move(data), DenseMatrix(0, 0)};
                    storage.Y = DenseMatrix(storage.X.rows, p.d2, 0.0);
                    bmask = x_mask;
                } else {
                    storage = {DenseMatrix(0, 0), std::move(data)};
                    storage.X = DenseMatrix(storage.Y.rows, p.d1, 0.0);
                    bmask = y_mask;
                }
                batch = &storage;
            }
            LossBreakdown lb = update_once(p, *batch, bmask, cfg, st);
            acc.add(lb);
            if (callbacks.on_update) callbacks.on_update({epoch, step, bmask, lb.total});
            ++step;
        }
        LossBreakdown mean = acc.mean();
        if (callbacks.on_epoch) callbacks.on_epoch(epoch, mean);
        result.epoch_log.push_back(mean);
    }
    result.params = std::move(p);
    return result;
}

TrainResult train_mae(CorrNetParams p, const std::vector<TwoViewBatch>& two_view,
                      const TrainConfig& cfg, const TrainCallbacks& callbacks) {
    validate(p);
    // E1 = reconstruct z from x, E2 = z from y, E3 = z from z, one term at
    // a time in that order.
    const LossTermMask sub_masks[3] = {LossTermMask::single(2), LossTermMask::single(3),
                                       LossTermMask::single(1)};
    Rng rng = Rng(cfg.seed);
    RmsPropState st;
    TrainResult result;
    std::size_t step = 0;

    std::vector<std::size_t> order(two_view.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = rng.split(epoch);
        erng.shuffle(order);
        EpochAccumulator acc;
        for (std::size_t idx : order) {
            TwoViewBatch merged;
            const TwoViewBatch* batch = &two_view[idx];
            if (cfg.merge_factor > 1) {
                merged = merge_bow(*batch, cfg.merge_factor);
                batch = &merged;
            }
            LossBreakdown combined;
            for (const LossTermMask& m : sub_masks) {
                LossBreakdown lb = update_once(p, *batch, m, cfg, st);
                if (callbacks.on_update) callbacks.on_update({epoch, step, m, lb.total});
                ++step;
                if (lb.l1) combined.l1 = lb.l1;
                if (lb.l2) combined.l2 = lb.l2;
                if (lb.l3) combined.l3 = lb.l3;
            }
            combined.total = combined.l1.value_or(0.0) + combined.l2.value_or(0.0) +
                             combined.l3.value_or(0.0);
            acc.add(combined);
        }
        LossBreakdown mean = acc.mean();
        if (callbacks.on_epoch) callbacks.on_epoch(epoch, mean);
        result.epoch_log.push_back(mean);
    }
    result.params = std::move(p);
    return result;
}

}  // namespace crlkit
