// End-to-end checks of the command line binary. The test runner exports
// CRLKIT_BIN with the built executable path.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crlkit/checkpoint.hpp"
#include "crlkit/datasets.hpp"
#include "crlkit/eval.hpp"
#include "crlkit/train.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace crlkit;

namespace {

std::string bin() {
    const char* b = std::getenv("CRLKIT_BIN");
    REQUIRE(b != nullptr);
    return b;
}

int run(const std::string& args) {
    std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path workdir() {
    fs::path d = fs::temp_directory_path() / "crlkit_cli_test";
    fs::create_directories(d);
    return d;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
}

std::string tiny_config(const fs::path& outdir) {
    std::ostringstream cfg;
    cfg << "data.kind=synth_digits\n"
        << "data.n=500\n"
        << "data.n_train=400\n"
        << "data.n_test=200\n"
        << "model.k=8\n"
        << "train.epochs=2\n"
        << "train.batch_size=50\n"
        << "train.learning_rate=0.01\n"
        << "train.optimizer=rmsprop\n"
        << "train.lambda=2.0\n"
        << "train.seed=11\n"
        << "eval.folds=2\n"
        << "output.dir=" << outdir.string() << "\n";
    return cfg.str();
}

}  // namespace

TEST_CASE("missing config file exits 2") {
    CHECK(run("train --config /nonexistent/xyz.cfg") == 2);
    CHECK(run("definitely-not-a-command") == 2);
    CHECK(run("train") == 2);  // missing required option
}

TEST_CASE("unknown config key exits 2") {
    fs::path d = workdir();
    write_file(d / "bad.cfg", "data.kind=synth_digits\nmodel.hidden=50\n");
    CHECK(run("train --config " + (d / "bad.cfg").string()) == 2);
}

TEST_CASE("train writes checkpoint, log, resolved config; determinism holds") {
    fs::path d = workdir();
    fs::path run1 = d / "run1", run2 = d / "run2";
    fs::remove_all(run1);
    fs::remove_all(run2);
    write_file(d / "train.cfg", tiny_config(run1));
    REQUIRE(run("train --config " + (d / "train.cfg").string()) == 0);
    CHECK(fs::exists(run1 / "checkpoint.crl"));
    CHECK(fs::exists(run1 / "training_log.csv"));
    CHECK(fs::exists(run1 / "resolved.cfg"));
    CHECK(fs::exists(run1 / "manifest.txt"));

    // Same seed, fresh output dir: bitwise identical checkpoint.
    REQUIRE(run("train --config " + (d / "train.cfg").string() +
                " --set output.dir=" + run2.string()) == 0);
    CHECK(slurp(run1 / "checkpoint.crl") == slurp(run2 / "checkpoint.crl"));

    // The training log has one row per epoch plus a header.
    std::ifstream log(run1 / "training_log.csv");
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) ++lines;
    CHECK(lines == 3);
}

TEST_CASE("epochs=0 run emits the untouched initialization") {
    fs::path d = workdir();
    fs::path run0 = d / "run0";
    fs::remove_all(run0);
    write_file(d / "zero.cfg", tiny_config(run0));
    REQUIRE(run("train --config " + (d / "zero.cfg").string() + " --set train.epochs=0") == 0);
    CorrNetParams p = load_corrnet_checkpoint((run0 / "checkpoint.crl").string());
    // Matches an in-process initialization with the same seed recipe.
    Rng init_rng = Rng(11).split(0x1217);
    CorrNetParams expect = init_corrnet(8, 392, 392, Activation::Sigmoid, Activation::Sigmoid,
                                        ReconLoss::Squared, init_rng);
    CHECK(p.W.data == expect.W.data);
    CHECK(p.Vp.data == expect.Vp.data);
}

TEST_CASE("eval consumes the checkpoint and writes a report") {
    fs::path d = workdir();
    fs::path run1 = d / "run_eval";
    fs::remove_all(run1);
    write_file(d / "train2.cfg", tiny_config(run1));
    REQUIRE(run("train --config " + (d / "train2.cfg").string()) == 0);
    fs::path report = run1 / "report.csv";
    fs::path dumps = run1 / "recon";
    REQUIRE(run("eval --checkpoint " + (run1 / "checkpoint.crl").string() + " --config " +
                (d / "train2.cfg").string() + " --out " + report.string() + " --dump-recon " +
                dumps.string()) == 0);
    CHECK(fs::exists(report));
    CHECK(fs::exists(dumps / "orig_0.pgm"));
    CHECK(fs::exists(dumps / "cross_0.pgm"));

    std::ifstream in(report);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header.find("sum_correlation") == 0);
    CHECK_FALSE(row.empty());

    // Dimension mismatch between checkpoint and dataset exits 2.
    CHECK(run("eval --checkpoint " + (run1 / "checkpoint.crl").string() + " --config " +
              (d / "train2.cfg").string() + " --set data.kind=synth_latent") == 2);
}

TEST_CASE("gradcheck command passes on a small budget") {
    CHECK(run("gradcheck --configs 2 --seed 7") == 0);
}

TEST_CASE("ablate and sweep-dims emit csv grids at toy scale") {
    fs::path d = workdir();
    fs::path runa = d / "run_ablate";
    fs::remove_all(runa);
    write_file(d / "ablate.cfg", tiny_config(runa) +
                                     "ablate.masks=L7+L8;L1+L2+L3+L4\n"
                                     "train.epochs=1\n");
    REQUIRE(run("ablate --config " + (d / "ablate.cfg").string()) == 0);
    std::ifstream in(runa / "ablation.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);  // header + 2 masks

    fs::path runs = d / "run_sweep";
    fs::remove_all(runs);
    write_file(d / "sweep.cfg", tiny_config(runs) +
                                    "sweep.dims=2,3\n"
                                    "train.epochs=1\n");
    REQUIRE(run("sweep-dims --config " + (d / "sweep.cfg").string()) == 0);
    std::ifstream sin(runs / "sweep_dims.csv");
    rows = 0;
    while (std::getline(sin, line)) ++rows;
    CHECK(rows == 7);  // header + 2 dims x 3 models
}

TEST_CASE("mnist_halves config path works on fabricated idx files") {
    fs::path d = workdir();
    fs::path rund = d / "run_mnist_path";
    fs::remove_all(rund);
    fs::create_directories(rund);

    Rng rng(55);
    auto fabricate = [&](const fs::path& ipath, const fs::path& lpath, std::uint32_t n) {
        IdxImages img;
        img.count = n;
        img.rows = 28;
        img.cols = 28;
        img.pixels.resize(std::size_t(n) * 784);
        for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.below(256));
        IdxLabels lbl;
        lbl.labels.resize(n);
        for (auto& l : lbl.labels) l = static_cast<std::uint8_t>(rng.below(10));
        write_idx_images(ipath.string(), img);
        write_idx_labels(lpath.string(), lbl);
    };
    fabricate(rund / "timg", rund / "tlbl", 60);
    fabricate(rund / "eimg", rund / "elbl", 30);

    std::ostringstream cfg;
    cfg << "data.kind=mnist_halves\n"
        << "data.images=" << (rund / "timg").string() << "\n"
        << "data.labels=" << (rund / "tlbl").string() << "\n"
        << "data.test_images=" << (rund / "eimg").string() << "\n"
        << "data.test_labels=" << (rund / "elbl").string() << "\n"
        << "data.n_train=50\n"
        << "model.k=4\n"
        << "train.epochs=1\ntrain.batch_size=25\ntrain.seed=3\n"
        << "eval.folds=2\n"
        << "output.dir=" << rund.string() << "\n";
    write_file(d / "mnist_path.cfg", cfg.str());
    REQUIRE(run("train --config " + (d / "mnist_path.cfg").string()) == 0);
    CHECK(fs::exists(rund / "checkpoint.crl"));
    REQUIRE(run("eval --checkpoint " + (rund / "checkpoint.crl").string() + " --config " +
                (d / "mnist_path.cfg").string() + " --out " + (rund / "r.csv").string()) == 0);
    CHECK(fs::exists(rund / "r.csv"));
}

TEST_CASE("match command tunes a threshold and reports f1") {
    fs::path d = workdir();
    fs::path rund = d / "run_match";
    fs::remove_all(rund);
    fs::create_directories(rund);

    // Two toy scripts: "abc..." words and their rot13-style counterparts.
    Rng rng(31337);
    auto make_word = [&](Rng& r) {
        std::string w;
        std::size_t len = 3 + r.below(5);
        for (std::size_t i = 0; i < len; ++i) w += static_cast<char>('a' + r.below(8));
        return w;
    };
    auto translit = [](const std::string& w) {
        std::string t;
        for (char c : w) t += static_cast<char>('q' + (c - 'a'));
        return t;
    };
    std::vector<std::string> xs, ys;
    for (int i = 0; i < 600; ++i) {
        std::string w = make_word(rng);
        xs.push_back(w);
        ys.push_back(translit(w));
    }
    Vocabulary vx = build_bigram_vocab(xs), vy = build_bigram_vocab(ys);
    vx.save((rund / "vocab_x.txt").string());
    vy.save((rund / "vocab_y.txt").string());

    DenseMatrix X(xs.size(), vx.size()), Y(ys.size(), vy.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        DenseVector fx = char_bigram_featurize(xs[i], vx);
        DenseVector fy = char_bigram_featurize(ys[i], vy);
        std::copy(fx.data.begin(), fx.data.end(), X.row_ptr(i));
        std::copy(fy.data.begin(), fy.data.end(), Y.row_ptr(i));
    }
    Rng init(5);
    CorrNetParams p = init_corrnet(10, vx.size(), vy.size(), Activation::Sigmoid,
                                   Activation::Sigmoid, ReconLoss::CrossEntropy, init);
    TrainConfig tc;
    tc.epochs = 25;
    tc.batch_size = 50;
    tc.learning_rate = 0.01;
    tc.optimizer = OptimizerKind::RmsProp;
    tc.lambda = 2.0;
    tc.mask = LossTermMask::corrnet(2.0);
    TrainResult res = train(p, make_batches(X, Y, tc.batch_size), tc);
    save_checkpoint((rund / "model.crl").string(), res.params);

    // Tune and test pair files: half genuine pairs, half mismatched.
    auto write_pairs = [&](const fs::path& path, int count, Rng& r) {
        std::ofstream out(path);
        for (int i = 0; i < count; ++i) {
            std::string w = make_word(r);
            if (i % 2 == 0) {
                out << w << "\t" << translit(w) << "\t1\n";
            } else {
                std::string other = make_word(r);
                while (other == w) other = make_word(r);
                out << w << "\t" << translit(other) << "\t0\n";
            }
        }
    };
    Rng pair_rng(77);
    write_pairs(rund / "tune.tsv", 200, pair_rng);
    write_pairs(rund / "test.tsv", 400, pair_rng);

    fs::path report = rund / "f1.csv";
    REQUIRE(run("match --checkpoint " + (rund / "model.crl").string() + " --pairs " +
                (rund / "test.tsv").string() + " --tune " + (rund / "tune.tsv").string() +
                " --vocab-x " + (rund / "vocab_x.txt").string() + " --vocab-y " +
                (rund / "vocab_y.txt").string() + " --out " + report.string()) == 0);
    std::ifstream in(report);
    std::string line;
    double f1 = -1.0;
    while (std::getline(in, line))
        if (line.rfind("f1,", 0) == 0) f1 = std::stod(line.substr(3));
    CHECK(f1 >= 0.85);
}
