// crlkit command line: reproducible two-view representation learning runs.
//
// Commands: train, eval, ablate, sweep-dims, gradcheck, match, fetch-mnist.
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "crlkit/checkpoint.hpp"
#include "crlkit/config.hpp"
#include "crlkit/eval.hpp"
#include "crlkit/runtime.hpp"
#include "crlkit/stats.hpp"

#ifdef CRLKIT_HAVE_ZLIB
#include <zlib.h>
#include "httplib.h"
#include "crlkit/crc32.hpp"
#endif

namespace fs = std::filesystem;
using namespace crlkit;

namespace {

struct LoadedData {
    ViewedDataset train;
    ViewedDataset val;
    ViewedDataset test;
    std::vector<SingleViewBatch> x_only;
    std::vector<SingleViewBatch> y_only;
    Vocabulary vocab_x, vocab_y;  // bow datasets only
    bool has_vocabs = false;
};

std::vector<std::vector<std::string>> read_token_docs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open document file '" + path + "'");
    std::vector<std::vector<std::string>> docs;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string tok;
        while (ls >> tok) {
            std::string clean;
            for (char c : tok)
                if (!ispunct(static_cast<unsigned char>(c))) clean += static_cast<char>(
                    tolower(static_cast<unsigned char>(c)));
            if (!clean.empty()) toks.push_back(clean);
        }
        docs.push_back(std::move(toks));
    }
    return docs;
}

LoadedData load_dataset(const ExperimentConfig& cfg) {
    LoadedData out;
    const std::string kind = cfg.get_string("data.kind");
    if (kind == "mnist_halves") {
        MnistData train_raw =
            load_mnist_idx(cfg.get_string("data.images"), cfg.get_string("data.labels"));
        ViewedDataset full = split_halves(train_raw.images, train_raw.labels);
        std::size_t n_train = static_cast<std::size_t>(cfg.get_int("data.n_train"));
        auto [train, val] = train_val_split(full, n_train, cfg.get_u64("data.split_seed"));
        out.train = std::move(train);
        out.val = std::move(val);
        const std::string ti = cfg.get_string("data.test_images");
        if (!ti.empty()) {
            MnistData test_raw = load_mnist_idx(ti, cfg.get_string("data.test_labels"));
            out.test = split_halves(test_raw.images, test_raw.labels);
        }
    } else if (kind == "synth_digits") {
        SynthDigits all = synth_digits(static_cast<std::size_t>(cfg.get_int("data.n")),
                                       cfg.get_u64("data.seed"));
        ViewedDataset full = split_halves(all.images, all.labels);
        full.manifest.provenance = "synth_digits";
        std::size_t n_train = static_cast<std::size_t>(cfg.get_int("data.n_train"));
        auto [train, val] = train_val_split(full, n_train, cfg.get_u64("data.split_seed"));
        out.train = std::move(train);
        out.val = std::move(val);
        SynthDigits t = synth_digits(static_cast<std::size_t>(cfg.get_int("data.n_test")),
                                     cfg.get_u64("data.seed") + 1);
        out.test = split_halves(t.images, t.labels);
        out.test.manifest.provenance = "synth_digits";
    } else if (kind == "synth_latent") {
        SynthLatentData d = synth_shared_latent(
            static_cast<std::size_t>(cfg.get_int("data.n")),
            static_cast<std::size_t>(cfg.get_int("data.d1")),
            static_cast<std::size_t>(cfg.get_int("data.d2")),
            static_cast<std::size_t>(cfg.get_int("data.latent_dim")),
            cfg.get_double("data.noise_sd"), cfg.get_u64("data.seed"));
        out.train = std::move(d.data);
        SynthLatentData t = synth_shared_latent(
            static_cast<std::size_t>(cfg.get_int("data.n_test")),
            static_cast<std::size_t>(cfg.get_int("data.d1")),
            static_cast<std::size_t>(cfg.get_int("data.d2")),
            static_cast<std::size_t>(cfg.get_int("data.latent_dim")),
            cfg.get_double("data.noise_sd"), cfg.get_u64("data.seed") + 1);
        out.test = std::move(t.data);
    } else if (kind == "bow_pair") {
        auto xdocs = read_token_docs(cfg.get_string("data.x_docs"));
        auto ydocs = read_token_docs(cfg.get_string("data.y_docs"));
        if (xdocs.size() != ydocs.size())
            throw ConfigError("bow_pair: x and y document counts differ");
        out.vocab_x = build_vocab(xdocs);
        out.vocab_y = build_vocab(ydocs);
        out.has_vocabs = true;
        out.train.X = bow_featurize(xdocs, out.vocab_x);
        out.train.Y = bow_featurize(ydocs, out.vocab_y);
        out.train.manifest.binary_views = true;
        out.train.manifest.provenance = "bow_pair";
        std::size_t batch = static_cast<std::size_t>(cfg.get_int("train.batch_size"));
        const std::string xo = cfg.get_string("data.x_only_docs");
        if (!xo.empty())
            out.x_only = make_single_batches(View::X, bow_featurize(read_token_docs(xo), out.vocab_x), batch);
        const std::string yo = cfg.get_string("data.y_only_docs");
        if (!yo.empty())
            out.y_only = make_single_batches(View::Y, bow_featurize(read_token_docs(yo), out.vocab_y), batch);
    } else {
        throw ConfigError("unknown data.kind '" + kind + "'");
    }

    const std::string bv = cfg.get_string("data.binary_views");
    if (bv != "auto") {
        out.train.manifest.binary_views = bv == "true" || bv == "1";
        out.test.manifest.binary_views = out.train.manifest.binary_views;
    }
    return out;
}

ReconLoss pick_recon_loss(const ExperimentConfig& cfg, const DatasetManifest& manifest) {
    const std::string rl = cfg.get_string("model.recon_loss");
    if (rl == "auto") return manifest.binary_views ? ReconLoss::CrossEntropy : ReconLoss::Squared;
    return recon_loss_from_name(rl);
}

TrainConfig train_config_from(const ExperimentConfig& cfg) {
    TrainConfig tc;
    tc.epochs = static_cast<std::size_t>(cfg.get_int("train.epochs"));
    tc.batch_size = static_cast<std::size_t>(cfg.get_int("train.batch_size"));
    tc.learning_rate = cfg.get_double("train.learning_rate");
    tc.optimizer = optimizer_from_name(cfg.get_string("train.optimizer"));
    tc.rmsprop_decay = cfg.get_double("train.rmsprop_decay");
    tc.rmsprop_eps = cfg.get_double("train.rmsprop_eps");
    tc.lambda = cfg.get_double("train.lambda");
    tc.mask = LossTermMask::from_names(cfg.get_string("train.mask"), tc.lambda);
    tc.seed = cfg.get_u64("train.seed");
    tc.merge_factor = static_cast<std::size_t>(cfg.get_int("train.merge_factor"));
    if (tc.learning_rate < 0.0) throw ConfigError("train.learning_rate must be >= 0");
    if (tc.merge_factor < 1) throw ConfigError("train.merge_factor must be >= 1");
    return tc;
}

std::string loss_csv_header() {
    return "epoch,l1,l2,l3,l4,l5,l6,l7,l8,corr_value,total,seconds";
}

std::string loss_csv_row(std::size_t epoch, const LossBreakdown& lb, double seconds) {
    std::ostringstream s;
    s.precision(10);
    s << epoch;
    for (int t = 1; t <= 8; ++t) {
        s << ",";
        if (auto v = lb.term(t)) s << *v;
    }
    s << ",";
    if (lb.corr_value) s << *lb.corr_value;
    s << "," << lb.total << "," << seconds;
    return s.str();
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
    for (const std::string& o : overrides) cfg.set_override(o);

    LoadedData data = load_dataset(cfg);
    fs::path outdir = cfg.get_string("output.dir");
    fs::create_directories(outdir);
    cfg.write_resolved((outdir / "resolved.cfg").string());
    data.train.manifest.save((outdir / "manifest.txt").string());
    if (data.has_vocabs) {
        data.vocab_x.save((outdir / "vocab_x.txt").string());
        data.vocab_y.save((outdir / "vocab_y.txt").string());
    }

    TrainConfig tc = train_config_from(cfg);
    ReconLoss rl = pick_recon_loss(cfg, data.train.manifest);
    Activation f = activation_from_name(cfg.get_string("model.f_act"));
    Activation g = activation_from_name(cfg.get_string("model.g_act"));
    std::size_t k = static_cast<std::size_t>(cfg.get_int("model.k"));

    Rng init_rng = Rng(tc.seed).split(0x1217);
    CorrNetParams params =
        init_corrnet(k, data.train.X.cols, data.train.Y.cols, f, g, rl, init_rng);
    std::vector<TwoViewBatch> batches = make_batches(data.train.X, data.train.Y, tc.batch_size);

    std::ofstream log(outdir / "training_log.csv");
    log << loss_csv_header() << "\n";
    auto started = std::chrono::steady_clock::now();
    TrainCallbacks cb;
    cb.on_epoch = [&](std::size_t epoch, const LossBreakdown& lb) {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                          .count();
        log << loss_csv_row(epoch, lb, secs) << "\n";
        log.flush();
        std::cout << "epoch " << epoch << " total " << lb.total;
        if (lb.corr_value) std::cout << " corr " << *lb.corr_value;
        std::cout << "\n";
    };

    const std::string method = cfg.get_string("train.method");
    TrainResult result;
    if (method == "mae") {
        result = train_mae(std::move(params), batches, tc, cb);
    } else if (method == "corrnet") {
        if (!data.x_only.empty() || !data.y_only.empty())
            result = train_mixed(std::move(params), batches, data.x_only, data.y_only, tc, cb);
        else
            result = train(std::move(params), batches, tc, cb);
    } else {
        throw ConfigError("unknown train.method '" + method + "'");
    }

    save_checkpoint((outdir / "checkpoint.crl").string(), result.params);
    std::cout << "wrote " << (outdir / "checkpoint.crl").string() << "\n";
    return 0;
}

void dump_reconstructions(const CorrNetParams& p, const ViewedDataset& ds,
                          const fs::path& dir, std::size_t count) {
    fs::create_directories(dir);
    count = std::min(count, ds.n());
    DenseMatrix Hx = encode_x(p, slice_rows(ds.X, 0, count));
    auto [xr, yr] = decode(p, Hx);
    for (std::size_t i = 0; i < count; ++i) {
        DenseMatrix orig = reassemble_halves(slice_rows(ds.X, i, i + 1),
                                             slice_rows(ds.Y, i, i + 1));
        write_pgm((dir / ("orig_" + std::to_string(i) + ".pgm")).string(), 28, 28,
                  orig.row_ptr(0));
        // Left half is the model input; right half is the cross reconstruction.
        DenseMatrix cross = reassemble_halves(slice_rows(ds.X, i, i + 1),
                                              slice_rows(yr, i, i + 1));
        write_pgm((dir / ("cross_" + std::to_string(i) + ".pgm")).string(), 28, 28,
                  cross.row_ptr(0));
        DenseMatrix self = reassemble_halves(slice_rows(xr, i, i + 1),
                                             slice_rows(ds.Y, i, i + 1));
        write_pgm((dir / ("self_" + std::to_string(i) + ".pgm")).string(), 28, 28,
                  self.row_ptr(0));
    }
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path,
             const std::vector<std::string>& overrides, const std::string& out_path,
             const std::string& dump_dir) {
    ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
    for (const std::string& o : overrides) cfg.set_override(o);
    LoadedData data = load_dataset(cfg);
    const ViewedDataset& test = data.test.n() > 0 ? data.test : data.train;

    EvalReport report;
    report.folds = static_cast<std::size_t>(cfg.get_int("eval.folds"));
    double l2 = cfg.get_double("eval.l2");
    std::uint64_t eseed = cfg.get_u64("eval.seed");
    report.metadata["checkpoint"] = checkpoint;
    report.metadata["dataset"] = test.manifest.provenance;
    report.metadata["eval_seed"] = std::to_string(eseed);
    report.metadata["mse_normalization"] = "per_element";

    CheckpointType type = peek_checkpoint_type(checkpoint);
    if (type == CheckpointType::CorrNet) {
        CorrNetParams p = load_corrnet_checkpoint(checkpoint);
        if (p.d1 != test.X.cols || p.d2 != test.Y.cols)
            throw ConfigError("checkpoint dims do not match the dataset views");
        DenseMatrix Hx = encode_x(p, test.X);
        DenseMatrix Hy = encode_y(p, test.Y);
        report.sum_correlation = sum_correlation(Hx, Hy);
        auto [ms, mc] = reconstruction_mse(p, {test.X, test.Y});
        report.mse_self = ms;
        report.mse_cross = mc;
        if (!test.labels.empty() && !data.train.labels.empty()) {
            report.transfer_l2r = transfer_accuracy(p, View::X, data.train.X, data.train.labels,
                                                    test.Y, test.labels, report.folds, l2, eseed);
            report.transfer_r2l = transfer_accuracy(p, View::Y, data.train.Y, data.train.labels,
                                                    test.X, test.labels, report.folds, l2, eseed);
        }
        if (!dump_dir.empty() && test.X.cols == 392)
            dump_reconstructions(p, test, dump_dir,
                                 static_cast<std::size_t>(cfg.get_int("eval.dump_count")));
    } else if (type == CheckpointType::DeepCorrNet) {
        DeepCorrNet net = load_deep_checkpoint(checkpoint);
        if (net.raw_d1 != test.X.cols || net.raw_d2 != test.Y.cols)
            throw ConfigError("checkpoint dims do not match the dataset views");
        DenseMatrix Hx = encode_deep_x(net, test.X);
        DenseMatrix Hy = encode_deep_y(net, test.Y);
        report.sum_correlation = sum_correlation(Hx, Hy);
        if (!test.labels.empty() && !data.train.labels.empty()) {
            DenseMatrix TrX = encode_deep_x(net, data.train.X);
            DenseMatrix TrY = encode_deep_y(net, data.train.Y);
            report.transfer_l2r = transfer_accuracy_reps(TrX, data.train.labels, Hy, test.labels,
                                                         report.folds, l2, eseed);
            report.transfer_r2l = transfer_accuracy_reps(TrY, data.train.labels, Hx, test.labels,
                                                         report.folds, l2, eseed);
        }
    } else {
        CcaModel model = load_cca_checkpoint(checkpoint);
        DenseMatrix Hx = project(model, View::X, test.X);
        DenseMatrix Hy = project(model, View::Y, test.Y);
        report.sum_correlation = sum_correlation(Hx, Hy);
        if (!test.labels.empty() && !data.train.labels.empty()) {
            DenseMatrix TrX = project(model, View::X, data.train.X);
            DenseMatrix TrY = project(model, View::Y, data.train.Y);
            report.transfer_l2r = transfer_accuracy_reps(TrX, data.train.labels, Hy, test.labels,
                                                         report.folds, l2, eseed);
            report.transfer_r2l = transfer_accuracy_reps(TrY, data.train.labels, Hx, test.labels,
                                                         report.folds, l2, eseed);
        }
    }

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot open '" + out_path + "' for writing");
        out << report.to_csv();
    }
    std::cout << report.to_text();
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
    for (const std::string& o : overrides) cfg.set_override(o);
    LoadedData data = load_dataset(cfg);
    if (data.test.n() == 0 || data.test.labels.empty())
        throw ConfigError("ablate needs a labeled test split");

    TrainConfig tc = train_config_from(cfg);
    std::vector<LossTermMask> masks;
    std::istringstream in(cfg.get_string("ablate.masks"));
    std::string tok;
    while (std::getline(in, tok, ';'))
        if (!tok.empty()) masks.push_back(LossTermMask::from_names(tok, tc.lambda));
    if (masks.empty()) throw ConfigError("ablate.masks is empty");

    std::vector<AblationRow> rows = ablation_grid(
        data.train, data.test, masks, tc, static_cast<std::size_t>(cfg.get_int("model.k")),
        activation_from_name(cfg.get_string("model.f_act")),
        activation_from_name(cfg.get_string("model.g_act")),
        pick_recon_loss(cfg, data.train.manifest),
        static_cast<std::size_t>(cfg.get_int("eval.folds")), cfg.get_double("eval.l2"));

    fs::path outdir = cfg.get_string("output.dir");
    fs::create_directories(outdir);
    std::ofstream out(outdir / "ablation.csv");
    out << "mask,left_to_right,right_to_left\n";
    std::cout << "mask,left_to_right,right_to_left\n";
    for (const AblationRow& row : rows) {
        std::ostringstream line;
        line.precision(6);
        line << row.mask.to_string() << "," << row.transfer_l2r << "," << row.transfer_r2l;
        out << line.str() << "\n";
        std::cout << line.str() << "\n";
    }
    return 0;
}

int cmd_sweep_dims(const std::string& config_path, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
    for (const std::string& o : overrides) cfg.set_override(o);
    LoadedData data = load_dataset(cfg);
    const ViewedDataset& test = data.test.n() > 0 ? data.test : data.train;
    TrainConfig tc = train_config_from(cfg);
    ReconLoss rl = pick_recon_loss(cfg, data.train.manifest);
    Activation f = activation_from_name(cfg.get_string("model.f_act"));
    Activation g = activation_from_name(cfg.get_string("model.g_act"));
    double ridge = cfg.get_double("cca.ridge");

    std::vector<std::size_t> dims;
    std::istringstream in(cfg.get_string("sweep.dims"));
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty()) dims.push_back(static_cast<std::size_t>(std::stoul(tok)));

    std::vector<TwoViewBatch> batches = make_batches(data.train.X, data.train.Y, tc.batch_size);
    fs::path outdir = cfg.get_string("output.dir");
    fs::create_directories(outdir);
    std::ofstream out(outdir / "sweep_dims.csv");
    out << "dim,model,sum_correlation\n";
    std::cout << "dim,model,sum_correlation\n";
    auto emit = [&](std::size_t dim, const char* model, double sc) {
        out << dim << "," << model << "," << sc << "\n";
        std::cout << dim << "," << model << "," << sc << "\n";
    };
    for (std::size_t dim : dims) {
        Rng init_rng = Rng(tc.seed).split(dim);
        CorrNetParams p0 =
            init_corrnet(dim, data.train.X.cols, data.train.Y.cols, f, g, rl, init_rng);
        TrainResult corr = train(p0, batches, tc);
        emit(dim, "corrnet",
             sum_correlation(encode_x(corr.params, test.X), encode_y(corr.params, test.Y)));

        TrainConfig mae_tc = tc;
        mae_tc.mask = LossTermMask::corrnet123();
        mae_tc.lambda = 0.0;
        TrainResult mae = train_mae(p0, batches, mae_tc);
        emit(dim, "mae",
             sum_correlation(encode_x(mae.params, test.X), encode_y(mae.params, test.Y)));

        CcaModel cca = fit_cca(data.train.X, data.train.Y, dim, ridge);
        emit(dim, "cca",
             sum_correlation(project(cca, View::X, test.X), project(cca, View::Y, test.Y)));
    }
    return 0;
}

int cmd_gradcheck(std::size_t n_configs, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t failures = 0, checked_total = 0;
    for (std::size_t c = 0; c < n_configs; ++c) {
        std::size_t d1 = 3 + rng.below(6), d2 = 3 + rng.below(6), k = 2 + rng.below(5),
                    n = 2 + rng.below(9);
        Activation f = rng.below(2) == 0 ? Activation::Sigmoid : Activation::Tanh;
        ReconLoss rl = rng.below(2) == 0 ? ReconLoss::Squared : ReconLoss::CrossEntropy;
        CorrNetParams p = init_corrnet(k, d1, d2, f, Activation::Sigmoid, rl, rng);
        TwoViewBatch batch{DenseMatrix(n, d1), DenseMatrix(n, d2)};
        for (double& v : batch.X.data) v = rng.uniform();
        for (double& v : batch.Y.data) v = rng.uniform();

        std::vector<LossTermMask> masks;
        for (int t = 1; t <= 8; ++t) masks.push_back(LossTermMask::single(t, 1.5));
        masks.push_back(LossTermMask::corrnet(2.0));

        for (const LossTermMask& mask : masks) {
            auto [lb, grads] = corrnet_loss_grad(p, batch, mask);
            (void)lb;
            ParamArrays parrays = collect_arrays(p);
            CorrNetGrads gc = grads;
            ParamArrays garrays = collect_arrays(gc);
            double worst = 0.0;
            bool ok = true;
            for (std::size_t a = 0; a < parrays.size(); ++a) {
                for (std::size_t i = 0; i < parrays[a].second; ++i) {
                    double orig = parrays[a].first[i];
                    const double h = 1e-5;
                    parrays[a].first[i] = orig + h;
                    double up = corrnet_loss(p, batch, mask).total;
                    parrays[a].first[i] = orig - h;
                    double down = corrnet_loss(p, batch, mask).total;
                    parrays[a].first[i] = orig;
                    double numeric = (up - down) / (2.0 * h);
                    double analytic = garrays[a].first[i];
                    ++checked_total;
                    double diff = std::fabs(analytic - numeric);
                    if (diff > 1e-8 &&
                        diff > 1e-6 * std::max(std::fabs(analytic), std::fabs(numeric))) {
                        ok = false;
                        worst = std::max(worst, diff);
                    }
                }
            }
            if (!ok) {
                ++failures;
                std::cout << "FAIL config " << c << " mask " << mask.to_string()
                          << " worst abs diff " << worst << "\n";
            }
        }
    }
    std::cout << (failures == 0 ? "PASS" : "FAIL") << ": " << checked_total
              << " gradient entries checked, " << failures << " mask failures\n";
    return failures == 0 ? 0 : 3;
}

struct LabeledPair {
    std::string x, y;
    bool label;
};

std::vector<LabeledPair> read_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pairs file '" + path + "'");
    std::vector<LabeledPair> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        LabeledPair p;
        std::string label;
        if (!std::getline(ls, p.x, '\t') || !std::getline(ls, p.y, '\t') ||
            !std::getline(ls, label))
            throw IoError("pairs file: malformed line '" + line + "'");
        p.label = label == "1" || label == "true";
        out.push_back(std::move(p));
    }
    return out;
}

int cmd_match(const std::string& checkpoint, const std::string& pairs_path,
              const std::string& tune_path, const std::string& vocab_x_path,
              const std::string& vocab_y_path, const std::string& out_path) {
    CorrNetParams p = load_corrnet_checkpoint(checkpoint);
    Vocabulary vx = Vocabulary::load(vocab_x_path);
    Vocabulary vy = Vocabulary::load(vocab_y_path);
    if (vx.size() != p.d1 || vy.size() != p.d2)
        throw ConfigError("vocabulary sizes do not match checkpoint dims");

    auto score_pairs = [&](const std::vector<LabeledPair>& pairs) {
        std::vector<std::pair<double, bool>> scored;
        scored.reserve(pairs.size());
        for (const LabeledPair& pr : pairs) {
            DenseVector fx = char_bigram_featurize(pr.x, vx);
            DenseVector fy = char_bigram_featurize(pr.y, vy);
            scored.push_back({correlation_score(p, fx, fy), pr.label});
        }
        return scored;
    };

    std::vector<LabeledPair> tune_pairs = read_pairs(tune_path);
    double threshold = tune_threshold(score_pairs(tune_pairs));

    std::vector<LabeledPair> test_pairs = read_pairs(pairs_path);
    std::vector<std::pair<double, bool>> scored = score_pairs(test_pairs);
    std::vector<bool> pred, truth;
    for (const auto& [s, l] : scored) {
        pred.push_back(s > threshold);
        truth.push_back(l);
    }
    PrecisionRecallF1 stats = f1_score(pred, truth);

    std::ostringstream rep;
    rep.precision(6);
    rep << "threshold," << threshold << "\n"
        << "precision," << stats.precision << "\n"
        << "recall," << stats.recall << "\n"
        << "f1," << stats.f1 << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << rep.str();
    }
    std::cout << rep.str();
    return 0;
}

#ifdef CRLKIT_HAVE_ZLIB

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw IoError("zlib init failed");
    std::vector<unsigned char> out;
    out.resize(in.size() * 4 + 1024);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::size_t written = 0;
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        if (written == out.size()) out.resize(out.size() * 2);
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IoError("gzip payload is corrupt");
        }
        written = out.size() - zs.avail_out;
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

int cmd_fetch_mnist(const std::string& out_dir, const std::string& base_url) {
    // Expected uncompressed payload sizes of the canonical MNIST files.
    struct Entry {
        const char* name;
        std::size_t bytes;
        bool images;
    };
    const Entry entries[4] = {
        {"train-images-idx3-ubyte", 47040016, true},
        {"train-labels-idx1-ubyte", 60008, false},
        {"t10k-images-idx3-ubyte", 7840016, true},
        {"t10k-labels-idx1-ubyte", 10008, false},
    };

    std::string url = base_url;
    std::string scheme = "http";
    if (url.rfind("http://", 0) == 0) url = url.substr(7);
    else if (url.rfind("https://", 0) == 0)
        throw ConfigError("fetch-mnist: built without TLS, use an http:// mirror");
    auto slash = url.find('/');
    std::string host = slash == std::string::npos ? url : url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "/" : url.substr(slash);
    if (prefix.back() != '/') prefix += '/';

    fs::create_directories(out_dir);
    httplib::Client client(host);
    client.set_connection_timeout(20);
    client.set_read_timeout(120);
    std::ofstream sums(fs::path(out_dir) / "checksums.crc32");
    for (const Entry& e : entries) {
        std::string path = prefix + e.name + ".gz";
        std::cout << "fetching http://" << host << path << "\n";
        auto res = client.Get(path);
        if (!res || res->status != 200)
            throw IoError("fetch-mnist: request failed for '" + path + "'" +
                          (res ? " (status " + std::to_string(res->status) + ")" : ""));
        std::vector<unsigned char> gz(res->body.begin(), res->body.end());
        std::vector<unsigned char> raw = gunzip(gz);
        if (raw.size() != e.bytes)
            throw IoError("fetch-mnist: '" + std::string(e.name) + "' has " +
                          std::to_string(raw.size()) + " bytes, expected " +
                          std::to_string(e.bytes));
        // Structural verification through the real parser.
        fs::path dest = fs::path(out_dir) / e.name;
        std::ofstream out(dest, std::ios::binary);
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
        out.close();
        if (e.images)
            (void)read_idx_images(dest.string());
        else
            (void)read_idx_labels(dest.string());
        sums << e.name << " " << std::hex << crc32(raw.data(), raw.size()) << std::dec << "\n";
    }
    std::cout << "MNIST files verified and written to " << out_dir << "\n";
    return 0;
}

#else

int cmd_fetch_mnist(const std::string&, const std::string&) {
    throw ConfigError("fetch-mnist: built without zlib support");
}

#endif

}  // namespace

int main(int argc, char** argv) {
    init_threads();
    CLI::App app{"crlkit: two-view common representation learning"};
    app.require_subcommand(1);

    std::string config_path, checkpoint, out_path, dump_dir;
    std::vector<std::string> overrides;

    auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
    train_cmd->add_option("--config", config_path, "key=value config file")->required();
    train_cmd->add_option("--set", overrides, "override config entries (key=value)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", checkpoint)->required();
    eval_cmd->add_option("--config", config_path)->required();
    eval_cmd->add_option("--set", overrides);
    eval_cmd->add_option("--out", out_path, "write the report CSV here");
    eval_cmd->add_option("--dump-recon", dump_dir, "write PGM reconstruction dumps here");

    auto* ablate_cmd = app.add_subcommand("ablate", "loss-term ablation grid");
    ablate_cmd->add_option("--config", config_path)->required();
    ablate_cmd->add_option("--set", overrides);

    auto* sweep_cmd = app.add_subcommand("sweep-dims", "sum correlation across dimensions");
    sweep_cmd->add_option("--config", config_path)->required();
    sweep_cmd->add_option("--set", overrides);

    std::size_t gc_configs = 20;
    std::uint64_t gc_seed = 20240917;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc_cmd->add_option("--configs", gc_configs, "number of random configurations");
    gc_cmd->add_option("--seed", gc_seed);

    std::string pairs_path, tune_path, vocab_x_path, vocab_y_path;
    auto* match_cmd = app.add_subcommand("match", "threshold-tuned pair matching");
    match_cmd->add_option("--checkpoint", checkpoint)->required();
    match_cmd->add_option("--pairs", pairs_path, "TSV: x<TAB>y<TAB>label")->required();
    match_cmd->add_option("--tune", tune_path, "TSV used for threshold tuning")->required();
    match_cmd->add_option("--vocab-x", vocab_x_path)->required();
    match_cmd->add_option("--vocab-y", vocab_y_path)->required();
    match_cmd->add_option("--out", out_path);

    std::string fetch_dir = "data";
    std::string base_url = "http://ossci-datasets.s3.amazonaws.com/mnist/";
    auto* fetch_cmd = app.add_subcommand("fetch-mnist", "download and verify the MNIST files");
    fetch_cmd->add_option("--out", fetch_dir);
    fetch_cmd->add_option("--base-url", base_url);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*train_cmd) return cmd_train(config_path, overrides);
        if (*eval_cmd) return cmd_eval(checkpoint, config_path, overrides, out_path, dump_dir);
        if (*ablate_cmd) return cmd_ablate(config_path, overrides);
        if (*sweep_cmd) return cmd_sweep_dims(config_path, overrides);
        if (*gc_cmd) return cmd_gradcheck(gc_configs, gc_seed);
        if (*match_cmd)
            return cmd_match(checkpoint, pairs_path, tune_path, vocab_x_path, vocab_y_path,
                             out_path);
        if (*fetch_cmd) return cmd_fetch_mnist(fetch_dir, base_url);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
