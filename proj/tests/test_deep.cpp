#include <cmath>

#include "crlkit/deep.hpp"
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

}  // namespace

TEST_CASE("stack decouples the common layer and records layer sizes") {
    Rng rng(100);
    CorrNetParams shallow = init_corrnet(500 / 50, 6, 7, Activation::Sigmoid,
                                         Activation::Sigmoid, ReconLoss::Squared, rng);
    DeepCorrNet net = stack(shallow, 4, rng);
    CHECK(net.layer_sizes == std::vector<std::size_t>{10, 4});
    CHECK(net.x_stack.size() == 1);
    CHECK(net.x_stack[0].W.data == shallow.W.data);
    CHECK(net.y_stack[0].W.data == shallow.V.data);
    // The shared bias lands in both pathways.
    CHECK(net.x_stack[0].b.data == shallow.b.data);
    CHECK(net.y_stack[0].b.data == shallow.b.data);
    CHECK(net.top.d1 == shallow.k);
    CHECK(net.top.d2 == shallow.k);
    CHECK(net.top.k == 4);

    DeepCorrNet deeper = stack(net, 2, rng);
    CHECK(deeper.layer_sizes == std::vector<std::size_t>{10, 4, 2});
    CHECK(deeper.x_stack.size() == 2);
    CHECK(deeper.x_dec.size() == 2);

    CHECK_THROWS_AS(stack(shallow, 0, rng), DimensionError);
    DeepCorrNet d3 = stack(deeper, 2, rng);
    CHECK_THROWS_AS(stack(d3, 2, rng), ConfigError);  // default max depth 4
}

TEST_CASE("stack preserves shallow behavior at initialization") {
    Rng rng(101);
    CorrNetParams shallow = init_corrnet(5, 6, 6, Activation::Sigmoid, Activation::Sigmoid,
                                         ReconLoss::Squared, rng);
    DeepCorrNet net = stack(shallow, 3, rng);
    DenseMatrix X = random_matrix(4, 6, rng);
    DenseMatrix expected = encode_x(net.top, encode_x(shallow, X));
    DenseMatrix got = encode_deep_x(net, X);
    CHECK(got.data == expected.data);

    DenseMatrix Y = random_matrix(4, 6, rng);
    DenseMatrix expected_both =
        encode_both(net.top, encode_x(shallow, X), encode_y(shallow, Y));
    CHECK(encode_deep_both(net, X, Y).data == expected_both.data);
}

TEST_CASE("deep encode with identity pathway layers equals shallow encode") {
    // Identity first layer: W = I, b = 0, f = identity. The deep encoding
    // then reduces to the top net's shallow encoding.
    std::size_t d = 5;
    CorrNetParams shallow;
    shallow.k = d;
    shallow.d1 = d;
    shallow.d2 = d;
    shallow.W = DenseMatrix(d, d, 0.0);
    shallow.V = DenseMatrix(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        shallow.W(i, i) = 1.0;
        shallow.V(i, i) = 1.0;
    }
    shallow.b = DenseVector(d, 0.0);
    shallow.Wp = DenseMatrix(d, d, 0.0);
    shallow.Vp = DenseMatrix(d, d, 0.0);
    shallow.bp = DenseVector(2 * d, 0.0);
    shallow.f_act = Activation::Identity;
    shallow.g_act = Activation::Identity;
    shallow.recon_loss = ReconLoss::Squared;

    Rng rng(102);
    DeepCorrNet net = stack(shallow, 3, rng);
    DenseMatrix X = random_matrix(6, d, rng);
    CHECK(encode_deep_x(net, X).data == encode_x(net.top, X).data);
}

TEST_CASE("deep encode matches a scalar-loop composition") {
    Rng rng(103);
    CorrNetParams shallow = init_corrnet(4, 5, 5, Activation::Tanh, Activation::Sigmoid,
                                         ReconLoss::Squared, rng);
    DeepCorrNet net = stack(shallow, 3, rng);
    DenseMatrix X = random_matrix(3, 5, rng);

    // Loop the pathway by hand, then the top by hand.
    DenseMatrix a1(3, 4, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double pre = net.x_stack[0].b[j];
            for (std::size_t c = 0; c < 5; ++c) pre += net.x_stack[0].W(j, c) * X(i, c);
            a1(i, j) = std::tanh(pre);
        }
    DenseMatrix expected = oracle::loop_encode(net.top, a1, a1, true, false);
    DenseMatrix got = encode_deep_x(net, X);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-12));
}

TEST_CASE("deep gradients match finite differences") {
    Rng rng(104);
    CorrNetParams shallow = init_corrnet(4, 5, 4, Activation::Sigmoid, Activation::Sigmoid,
                                         ReconLoss::Squared, rng);
    DeepCorrNet net = stack(shallow, 3, rng);
    TwoViewBatch batch{random_matrix(5, 5, rng), random_matrix(5, 4, rng)};
    LossTermMask mask = LossTermMask::corrnet(1.5);

    auto [lb, grads] = deep_loss_grad(net, batch, mask);
    (void)lb;
    auto loss_fn = [&]() { return deep_loss(net, batch, mask).total; };

    auto check_block = [&](DenseMatrix& param, const DenseMatrix& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            double numeric = oracle::central_diff(param.data[i], loss_fn);
            CHECK(oracle::grad_close(grad.data[i], numeric));
        }
    };
    auto check_vec = [&](DenseVector& param, const DenseVector& grad) {
        for (std::size_t i = 0; i < param.len(); ++i) {
            double numeric = oracle::central_diff(param.data[i], loss_fn);
            CHECK(oracle::grad_close(grad.data[i], numeric));
        }
    };

    check_block(net.x_stack[0].W, grads.dx_stack[0].W);
    check_vec(net.x_stack[0].b, grads.dx_stack[0].b);
    check_block(net.y_stack[0].W, grads.dy_stack[0].W);
    check_block(net.top.W, grads.dtop.dW);
    check_block(net.top.V, grads.dtop.dV);
    check_vec(net.top.b, grads.dtop.db);
    check_block(net.top.Wp, grads.dtop.dWp);
    check_block(net.top.Vp, grads.dtop.dVp);
    check_vec(net.top.bp, grads.dtop.dbp);
    check_block(net.x_dec[0].W, grads.dx_dec[0].W);
    check_vec(net.x_dec[0].b, grads.dx_dec[0].b);
    check_block(net.y_dec[0].W, grads.dy_dec[0].W);
}

TEST_CASE("train_deep: zero epochs no-op, joint updates move pathway layers") {
    Rng rng(105);
    CorrNetParams shallow = init_corrnet(5, 6, 6, Activation::Sigmoid, Activation::Sigmoid,
                                         ReconLoss::Squared, rng);
    DeepCorrNet net = stack(shallow, 3, rng);
    std::vector<TwoViewBatch> batches;
    batches.push_back({random_matrix(12, 6, rng), random_matrix(12, 6, rng)});

    TrainConfig cfg;
    cfg.epochs = 0;
    DeepTrainResult r0 = train_deep(net, batches, cfg);
    CHECK(r0.net.top.W.data == net.top.W.data);
    CHECK(r0.net.x_stack[0].W.data == net.x_stack[0].W.data);

    cfg.epochs = 3;
    cfg.learning_rate = 0.05;
    cfg.lambda = 1.0;
    cfg.mask = LossTermMask::corrnet(1.0);
    DeepTrainResult r1 = train_deep(net, batches, cfg);
    CHECK(r1.net.x_stack[0].W.data != net.x_stack[0].W.data);  // fine-tuned
    CHECK(r1.net.top.W.data != net.top.W.data);

    DeepTrainResult r2 = train_deep(net, batches, cfg, /*freeze_pretrained=*/true);
    CHECK(r2.net.x_stack[0].W.data == net.x_stack[0].W.data);  // frozen
    CHECK(r2.net.top.W.data != net.top.W.data);

    // Determinism.
    DeepTrainResult r3 = train_deep(net, batches, cfg);
    CHECK(r3.net.top.W.data == r1.net.top.W.data);
    CHECK(r3.net.x_dec[0].W.data == r1.net.x_dec[0].W.data);
}

TEST_CASE("decode_deep maps back to raw dimensions") {
    Rng rng(106);
    CorrNetParams shallow = init_corrnet(4, 7, 6, Activation::Sigmoid, Activation::Sigmoid,
                                         ReconLoss::Squared, rng);
    DeepCorrNet net = stack(shallow, 3, rng);
    DenseMatrix X = random_matrix(2, 7, rng), Y = random_matrix(2, 6, rng);
    DenseMatrix H = encode_deep_both(net, X, Y);
    auto [xr, yr] = decode_deep(net, H);
    CHECK(xr.rows == 2);
    CHECK(xr.cols == 7);
    CHECK(yr.cols == 6);
    for (double v : xr.data) CHECK(std::isfinite(v));
}
