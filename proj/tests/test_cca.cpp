#include <cmath>

#include "crlkit/cca.hpp"
#include "crlkit/datasets.hpp"
#include "crlkit/eval.hpp"
#include "crlkit/rng.hpp"
#include "crlkit/stats.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crlkit;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    DenseMatrix m(r, c);
    for (double& v : m.data) v = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("identical views give unit correlations") {
    Rng rng(50);
    DenseMatrix X = random_matrix(200, 4, rng);
    CcaModel model = fit_cca(X, X, 4, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(model.correlations[i] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("independent views give near-zero correlations") {
    Rng rng(51);
    DenseMatrix X = random_matrix(10000, 5, rng);
    DenseMatrix Y = random_matrix(10000, 5, rng);
    CcaModel model = fit_cca(X, Y, 5, 0.0);
    for (std::size_t i = 0; i < 5; ++i) CHECK(model.correlations[i] <= 0.1);
}

TEST_CASE("shared-latent construction recovers the closed-form correlations") {
    SynthLatentData synth = synth_shared_latent(10000, 5, 5, 3, 1.0, 1234);
    CcaModel model = fit_cca(synth.data.X, synth.data.Y, 5, 0.0);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(std::fabs(model.correlations[i] - synth.true_correlations[i]) <= 0.02);
    // Exactly latent_dim substantial correlations.
    CHECK(synth.true_correlations[2] > 0.1);
    CHECK(synth.true_correlations[3] <= 1e-6);
}

TEST_CASE("errors: k too large, singular covariance without ridge") {
    Rng rng(52);
    DenseMatrix X = random_matrix(50, 3, rng);
    DenseMatrix Y = random_matrix(50, 4, rng);
    CHECK_THROWS_AS(fit_cca(X, Y, 4, 0.0), DimensionError);

    // Duplicate a column: covariance becomes singular.
    DenseMatrix Xs = hcat(X, slice_cols(X, 0, 1));
    CHECK_THROWS_AS(fit_cca(Xs, Y, 2, 0.0), NumericError);
    // Ridge fixes it.
    CcaModel m = fit_cca(Xs, Y, 2, 1e-4);
    CHECK(m.correlations[0] >= 0.0);
}

TEST_CASE("correlations sorted descending and inside [0,1]") {
    SynthLatentData synth = synth_shared_latent(2000, 6, 4, 2, 0.7, 77);
    CcaModel model = fit_cca(synth.data.X, synth.data.Y, 4, 1e-8);
    for (std::size_t i = 0; i + 1 < 4; ++i)
        CHECK(model.correlations[i] >= model.correlations[i + 1]);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(model.correlations[i] >= 0.0);
        CHECK(model.correlations[i] <= 1.0);
    }
}

TEST_CASE("projection equals the loop oracle and reproduces the correlations") {
    SynthLatentData synth = synth_shared_latent(500, 4, 4, 2, 0.5, 99);
    CcaModel model = fit_cca(synth.data.X, synth.data.Y, 3, 0.0);

    DenseMatrix Px = project(model, View::X, synth.data.X);
    DenseMatrix Py = project(model, View::Y, synth.data.Y);

    // Loop oracle: (row - mean) dot proj column.
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < 4; ++c)
                acc += (synth.data.X(i, c) - model.mean_x[c]) * model.proj_x(c, j);
            CHECK(Px(i, j) == doctest::Approx(acc).epsilon(1e-10));
        }

    // Per-dimension Pearson between the training projections equals the
    // fitted correlation vector.
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> a(Px.rows), b(Px.rows);
        for (std::size_t i = 0; i < Px.rows; ++i) {
            a[i] = Px(i, j);
            b[i] = Py(i, j);
        }
        CHECK(pearson(a.data(), b.data(), a.size()) ==
              doctest::Approx(model.correlations[j]).epsilon(1e-6));
    }

    // Constant row projects to the -mean contribution, finite.
    DenseMatrix constant(1, 4, 0.42);
    DenseMatrix pc = project(model, View::X, constant);
    for (double v : pc.data) CHECK(std::isfinite(v));

    // sum of fitted correlations equals sum_correlation on the projections.
    double sum_fit = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum_fit += model.correlations[j];
    CHECK(sum_correlation(Px, Py) == doctest::Approx(sum_fit).epsilon(1e-8));
}

TEST_CASE("training projections are unit-variance and mutually uncorrelated") {
    SynthLatentData synth = synth_shared_latent(4000, 5, 5, 3, 0.6, 202);
    CcaModel model = fit_cca(synth.data.X, synth.data.Y, 4, 0.0);
    DenseMatrix Px = project(model, View::X, synth.data.X);
    const double n1 = static_cast<double>(Px.rows - 1);
    for (std::size_t j = 0; j < Px.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < Px.rows; ++i) mean += Px(i, j);
        mean /= static_cast<double>(Px.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < Px.rows; ++i) var += (Px(i, j) - mean) * (Px(i, j) - mean);
        CHECK(var / n1 == doctest::Approx(1.0).epsilon(1e-6));
    }
    for (std::size_t a = 0; a < Px.cols; ++a)
        for (std::size_t b = a + 1; b < Px.cols; ++b) {
            std::vector<double> u(Px.rows), v(Px.rows);
            for (std::size_t i = 0; i < Px.rows; ++i) {
                u[i] = Px(i, a);
                v[i] = Px(i, b);
            }
            CHECK(std::fabs(pearson(u.data(), v.data(), u.size())) <= 1e-6);
        }
}

TEST_CASE("affine invariance of the correlation spectrum") {
    SynthLatentData synth = synth_shared_latent(3000, 4, 4, 2, 0.8, 1010);
    CcaModel base = fit_cca(synth.data.X, synth.data.Y, 4, 0.0);

    // Apply a well-conditioned invertible affine map to X.
    Rng rng(60);
    DenseMatrix T = random_matrix(4, 4, rng);
    for (std::size_t i = 0; i < 4; ++i) T(i, i) += 3.0;  // diagonally dominant
    DenseMatrix Xt = matmul(synth.data.X, T);
    for (std::size_t r = 0; r < Xt.rows; ++r)
        for (std::size_t c = 0; c < Xt.cols; ++c) Xt(r, c) += 5.0 - static_cast<double>(c);

    CcaModel moved = fit_cca(Xt, synth.data.Y, 4, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::fabs(moved.correlations[i] - base.correlations[i]) <= 1e-6);
}

TEST_CASE("project dimension mismatch throws") {
    SynthLatentData synth = synth_shared_latent(100, 4, 3, 2, 0.5, 5);
    CcaModel model = fit_cca(synth.data.X, synth.data.Y, 2, 1e-6);
    DenseMatrix wrong(1, 5, 0.0);
    CHECK_THROWS_AS(project(model, View::X, wrong), DimensionError);
}
