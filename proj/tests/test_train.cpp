#include <cmath>

#include "crlkit/eval.hpp"
#include "crlkit/train.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crlkit;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = 0.0,
                          double hi = 1.0) {
    DenseMatrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

DenseMatrix random_binary(std::size_t r, std::size_t c, Rng& rng, double p1 = 0.3) {
    DenseMatrix m(r, c, 0.0);
    for (double& v : m.data) v = rng.uniform() < p1 ? 1.0 : 0.0;
    return m;
}

}  // namespace

TEST_CASE("zero epochs and zero learning rate leave parameters bitwise unchanged") {
    Rng rng(30);
    CorrNetParams p = init_corrnet(3, 5, 5, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    std::vector<TwoViewBatch> batches =
        make_batches(random_matrix(20, 5, rng), random_matrix(20, 5, rng), 8);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.mask = LossTermMask::corrnet123();
    TrainResult r0 = train(p, batches, cfg);
    CHECK(r0.params.W.data == p.W.data);
    CHECK(r0.params.bp.data == p.bp.data);
    CHECK(r0.epoch_log.empty());

    cfg.epochs = 4;
    cfg.learning_rate = 0.0;
    TrainResult r1 = train(p, batches, cfg);
    CHECK(r1.params.W.data == p.W.data);
    CHECK(r1.params.V.data == p.V.data);
    CHECK(r1.params.b.data == p.b.data);
    CHECK(r1.params.Wp.data == p.Wp.data);
    CHECK(r1.params.Vp.data == p.Vp.data);
    CHECK(r1.params.bp.data == p.bp.data);
    CHECK(r1.epoch_log.size() == 4);
}

TEST_CASE("training is bitwise deterministic given the seed") {
    Rng rng(31);
    CorrNetParams p = init_corrnet(4, 6, 6, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    std::vector<TwoViewBatch> batches =
        make_batches(random_matrix(40, 6, rng), random_matrix(40, 6, rng), 10);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.05;
    cfg.optimizer = OptimizerKind::RmsProp;
    cfg.lambda = 1.0;
    cfg.mask = LossTermMask::corrnet(1.0);
    cfg.seed = 99;
    TrainResult a = train(p, batches, cfg);
    TrainResult b = train(p, batches, cfg);
    CHECK(a.params.W.data == b.params.W.data);
    CHECK(a.params.Vp.data == b.params.Vp.data);
    CHECK(a.params.bp.data == b.params.bp.data);
}

TEST_CASE("identity-view toy task reaches high correlation") {
    // Two equal views, d = k = 4: after a few hundred epochs nearly all of
    // the max possible correlation (4) is captured.
    Rng rng(32);
    DenseMatrix X = random_matrix(64, 4, rng);
    std::vector<TwoViewBatch> batches = make_batches(X, X, 16);
    CorrNetParams p = init_corrnet(4, 4, 4, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 0.01;
    cfg.optimizer = OptimizerKind::RmsProp;
    cfg.lambda = 2.0;
    cfg.mask = LossTermMask::corrnet(2.0);
    cfg.seed = 1;
    TrainResult res = train(p, batches, cfg);
    DenseMatrix hx = encode_x(res.params, X);
    DenseMatrix hy = encode_y(res.params, X);
    CHECK(sum_correlation(hx, hy) >= 3.5);
}

TEST_CASE("train_mixed with empty single-view streams equals train") {
    Rng rng(33);
    CorrNetParams p = init_corrnet(3, 5, 4, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    std::vector<TwoViewBatch> batches =
        make_batches(random_matrix(30, 5, rng), random_matrix(30, 4, rng), 10);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.learning_rate = 0.02;
    cfg.lambda = 1.0;
    cfg.mask = LossTermMask::corrnet(1.0);
    cfg.seed = 5;
    TrainResult a = train(p, batches, cfg);
    TrainResult b = train_mixed(p, batches, {}, {}, cfg);
    CHECK(a.params.W.data == b.params.W.data);
    CHECK(a.params.Vp.data == b.params.Vp.data);
}

TEST_CASE("x-only steps leave V, V' and the y-half of b' untouched") {
    Rng rng(34);
    CorrNetParams p = init_corrnet(3, 5, 4, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    std::vector<SingleViewBatch> x_only = make_single_batches(View::X, random_matrix(20, 5, rng), 10);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.learning_rate = 0.05;
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.mask = LossTermMask::corrnet123();
    TrainResult res = train_mixed(p, {}, x_only, {}, cfg);
    CHECK(res.params.V.data == p.V.data);
    CHECK(res.params.Vp.data == p.Vp.data);
    for (std::size_t i = p.d1; i < p.bp.len(); ++i) CHECK(res.params.bp[i] == p.bp[i]);
    // And the x side moved.
    CHECK(res.params.W.data != p.W.data);
}

TEST_CASE("single-view data improves held-out cross reconstruction") {
    // Bilingual-style toy: y is a fixed linear scramble of x. Little paired
    // data, plenty of x-only and y-only data.
    Rng rng(35);
    std::size_t d = 6;
    DenseMatrix mix = random_matrix(d, d, rng, -0.8, 0.8);
    auto make_pair = [&](std::size_t n, Rng& r) {
        DenseMatrix X = random_matrix(n, d, r);
        DenseMatrix Y = matmul(X, mix);
        for (double& v : Y.data) v = 1.0 / (1.0 + std::exp(-v));
        return TwoViewBatch{X, Y};
    };
    TwoViewBatch paired = make_pair(24, rng);
    TwoViewBatch held = make_pair(200, rng);
    TwoViewBatch extra = make_pair(200, rng);

    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.01;
    cfg.optimizer = OptimizerKind::RmsProp;
    cfg.lambda = 1.0;
    cfg.mask = LossTermMask::corrnet(1.0);
    cfg.seed = 7;

    Rng prng(36);
    CorrNetParams p0 = init_corrnet(6, d, d, Activation::Sigmoid, Activation::Sigmoid,
                                    ReconLoss::Squared, prng);
    std::vector<TwoViewBatch> paired_batches = make_batches(paired.X, paired.Y, 12);

    TrainResult plain = train(p0, paired_batches, cfg);
    TrainResult mixed = train_mixed(p0, paired_batches,
                                    make_single_batches(View::X, extra.X, 25),
                                    make_single_batches(View::Y, extra.Y, 25), cfg);

    auto cross_mse = [&](const CorrNetParams& p) {
        return reconstruction_mse(p, held).second;
    };
    CHECK(cross_mse(mixed.params) < cross_mse(plain.params));
}

TEST_CASE("mae schedule: three updates per batch, lr 0 no-op") {
    Rng rng(37);
    CorrNetParams p = init_corrnet(3, 4, 4, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    std::vector<TwoViewBatch> batches =
        make_batches(random_matrix(10, 4, rng), random_matrix(10, 4, rng), 10);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 0.01;
    std::size_t updates = 0;
    std::vector<std::string> masks_seen;
    TrainCallbacks cb;
    cb.on_update = [&](const UpdateEvent& e) {
        ++updates;
        masks_seen.push_back(e.mask.to_string());
    };
    train_mae(p, batches, cfg, cb);
    CHECK(updates == 3);  // one batch, one epoch, three term updates
    REQUIRE(masks_seen.size() == 3);
    CHECK(masks_seen[0] == "L2");
    CHECK(masks_seen[1] == "L3");
    CHECK(masks_seen[2] == "L1");

    cfg.learning_rate = 0.0;
    TrainResult frozen = train_mae(p, batches, cfg);
    CHECK(frozen.params.W.data == p.W.data);
    CHECK(frozen.params.bp.data == p.bp.data);
}

TEST_CASE("merge_bow unions consecutive rows") {
    DenseMatrix X(3, 3, 0.0);
    X(0, 0) = 1.0;
    X(1, 1) = 1.0;
    // row 2 stays zero
    DenseMatrix Y(3, 2, 0.0);
    Y(0, 1) = 1.0;
    Y(2, 0) = 1.0;
    TwoViewBatch merged = merge_bow({X, Y}, 2);
    CHECK(merged.X.rows == 2);
    CHECK(merged.X(0, 0) == 1.0);
    CHECK(merged.X(0, 1) == 1.0);
    CHECK(merged.X(0, 2) == 0.0);
    CHECK(merged.X(1, 0) == 0.0);  // trailing partial group kept as-is
    CHECK(merged.Y(0, 1) == 1.0);
    CHECK(merged.Y(1, 0) == 1.0);

    TwoViewBatch same = merge_bow({X, Y}, 1);
    CHECK(same.X.data == X.data);
    CHECK_THROWS_AS(merge_bow({X, Y}, 0), ConfigError);
}

TEST_CASE("merge_bow matches brute-force union and keeps bags binary") {
    Rng rng(38);
    DenseMatrix X = random_binary(23, 9, rng);
    DenseMatrix Y = random_binary(23, 7, rng);
    for (std::size_t mf : {2, 3, 5, 23, 50}) {
        TwoViewBatch merged = merge_bow({X, Y}, mf);
        std::size_t groups = (X.rows + mf - 1) / mf;
        REQUIRE(merged.X.rows == groups);
        CHECK(merged.X.cols == X.cols);
        for (std::size_t g = 0; g < groups; ++g)
            for (std::size_t c = 0; c < X.cols; ++c) {
                double expect = 0.0;
                for (std::size_t r = g * mf; r < std::min<std::size_t>(X.rows, (g + 1) * mf); ++r)
                    expect = std::max(expect, X(r, c));
                CHECK(merged.X(g, c) == expect);
                CHECK((merged.X(g, c) == 0.0 || merged.X(g, c) == 1.0));
            }
    }
}

TEST_CASE("rmsprop_step: zero grad decays state, constant grad fixed point, first step") {
    Rng rng(39);
    CorrNetParams p = init_corrnet(2, 3, 3, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.rmsprop_decay = 0.9;
    cfg.rmsprop_eps = 1e-6;

    CorrNetGrads zero = zero_grads(p);
    RmsPropState st;
    CorrNetParams before = p;
    rmsprop_step(p, zero, st, cfg);
    CHECK(p.W.data == before.W.data);

    // First step from s = 0 with gradient g: delta = lr*g/sqrt((1-rho)g^2+eps).
    CorrNetGrads g = zero_grads(p);
    g.dW(0, 0) = 0.5;
    RmsPropState st2;
    CorrNetParams q = before;
    rmsprop_step(q, g, st2, cfg);
    double expect = 0.1 * 0.5 / std::sqrt(0.1 * 0.25 + 1e-6);
    CHECK(before.W(0, 0) - q.W(0, 0) == doctest::Approx(expect).epsilon(1e-12));

    // Constant gradient: step size approaches lr*sign(g).
    for (int i = 0; i < 400; ++i) rmsprop_step(q, g, st2, cfg);
    CorrNetParams q2 = q;
    rmsprop_step(q2, g, st2, cfg);
    CHECK(q.W(0, 0) - q2.W(0, 0) == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("non-finite loss aborts with the offending term named") {
    Rng rng(40);
    CorrNetParams p = init_corrnet(2, 3, 3, Activation::Identity, Activation::Identity,
                                   ReconLoss::Squared, rng);
    // Blow the parameters up so squared loss overflows to inf quickly.
    for (double& v : p.W.data) v = 1e160;
    for (double& v : p.Wp.data) v = 1e160;
    std::vector<TwoViewBatch> batches =
        make_batches(random_matrix(4, 3, rng), random_matrix(4, 3, rng), 4);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.mask = LossTermMask::corrnet123();
    try {
        train(p, batches, cfg);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("L") != std::string::npos);
    }
}

TEST_CASE("batch_size below 2 with an active correlation term is rejected") {
    Rng rng(44);
    CorrNetParams p = init_corrnet(2, 3, 3, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    std::vector<TwoViewBatch> batches =
        make_batches(random_matrix(6, 3, rng), random_matrix(6, 3, rng), 1);
    TrainConfig cfg;
    cfg.batch_size = 1;
    cfg.lambda = 1.0;
    cfg.mask = LossTermMask::corrnet(1.0);
    CHECK_THROWS_AS(train(p, batches, cfg), ConfigError);
    cfg.mask = LossTermMask::corrnet123();
    CHECK_NOTHROW(train(p, batches, cfg));
}

TEST_CASE("epoch-mean loss drops from epoch 1 to epoch 10 across seeds") {
    // Small two-view digit task standing in for the full-size check.
    SynthDigits d = synth_digits(1500, 88);
    ViewedDataset ds = split_halves(d.images, d.labels);
    std::vector<TwoViewBatch> batches = make_batches(ds.X, ds.Y, 100);
    int ok = 0;
    for (int seed = 0; seed < 5; ++seed) {
        Rng rng(3000 + seed);
        CorrNetParams p = init_corrnet(10, 392, 392, Activation::Sigmoid, Activation::Sigmoid,
                                       ReconLoss::Squared, rng);
        TrainConfig cfg;
        cfg.epochs = 10;
        cfg.batch_size = 100;
        cfg.learning_rate = 0.01;
        cfg.optimizer = OptimizerKind::RmsProp;
        cfg.lambda = 2.0;
        cfg.mask = LossTermMask::corrnet(2.0);
        cfg.seed = static_cast<std::uint64_t>(seed);
        TrainResult res = train(p, batches, cfg);
        if (res.epoch_log[9].total < res.epoch_log[0].total) ++ok;
    }
    CHECK(ok >= 5);
}

TEST_CASE("trailing batch of size 1 skips the correlation term with a warning") {
    Rng rng(41);
    CorrNetParams p = init_corrnet(2, 3, 3, Activation::Sigmoid, Activation::Sigmoid,
                                   ReconLoss::Squared, rng);
    // 5 rows with batch size 4: trailing batch has a single row.
    std::vector<TwoViewBatch> batches =
        make_batches(random_matrix(5, 3, rng), random_matrix(5, 3, rng), 4);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 0.01;
    cfg.lambda = 1.0;
    cfg.mask = LossTermMask::corrnet(1.0);
    std::vector<std::string> warnings;
    TrainCallbacks cb;
    cb.on_warn = [&](const std::string& w) { warnings.push_back(w); };
    bool saw_l4_skip = false;
    cb.on_update = [&](const UpdateEvent& e) {
        if (!e.mask.l4) saw_l4_skip = true;
    };
    train(p, batches, cfg, cb);
    CHECK(saw_l4_skip);
    CHECK(warnings.size() == 1);
}
