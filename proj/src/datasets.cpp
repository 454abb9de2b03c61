#include "crlkit/datasets.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "crlkit/common.hpp"
#include "crlkit/rng.hpp"

namespace crlkit {

// ---- manifest ----

void DatasetManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("manifest: cannot open '" + path + "' for writing");
    out << "binary_views=" << (binary_views ? "true" : "false") << "\n";
    out << "name_x=" << name_x << "\n";
    out << "name_y=" << name_y << "\n";
    out << "provenance=" << provenance << "\n";
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("manifest: cannot open '" + path + "'");
    DatasetManifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("manifest: malformed line '" + line + "'");
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "binary_views") m.binary_views = val == "true" || val == "1";
        else if (key == "name_x") m.name_x = val;
        else if (key == "name_y") m.name_y = val;
        else if (key == "provenance") m.provenance = val;
        else throw IoError("manifest: unknown key '" + key + "'");
    }
    return m;
}

// ---- IDX ----

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("idx: truncated file '" + path + "'");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("idx: cannot open '" + path + "'");
    std::uint32_t magic = read_be_u32(in, path);
    if (magic != kImageMagic)
        throw IoError("idx: bad image magic in '" + path + "' (got 0x" +
                      [&] { std::ostringstream s; s << std::hex << magic; return s.str(); }() +
                      ", want 0x803)");
    IdxImages img;
    img.count = read_be_u32(in, path);
    img.rows = read_be_u32(in, path);
    img.cols = read_be_u32(in, path);
    std::size_t total = std::size_t(img.count) * img.rows * img.cols;
    img.pixels.resize(total);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(total));
    if (static_cast<std::size_t>(in.gcount()) != total)
        throw IoError("idx: truncated image payload in '" + path + "'");
    return img;
}

IdxLabels read_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("idx: cannot open '" + path + "'");
    std::uint32_t magic = read_be_u32(in, path);
    if (magic != kLabelMagic)
        throw IoError("idx: bad label magic in '" + path + "'");
    std::uint32_t count = read_be_u32(in, path);
    IdxLabels lbl;
    lbl.labels.resize(count);
    in.read(reinterpret_cast<char*>(lbl.labels.data()), count);
    if (static_cast<std::size_t>(in.gcount()) != count)
        throw IoError("idx: truncated label payload in '" + path + "'");
    return lbl;
}

void write_idx_images(const std::string& path, const IdxImages& images) {
    if (images.pixels.size() != std::size_t(images.count) * images.rows * images.cols)
        throw DimensionError("idx: pixel buffer does not match header counts");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("idx: cannot open '" + path + "' for writing");
    write_be_u32(out, kImageMagic);
    write_be_u32(out, images.count);
    write_be_u32(out, images.rows);
    write_be_u32(out, images.cols);
    out.write(reinterpret_cast<const char*>(images.pixels.data()),
              static_cast<std::streamsize>(images.pixels.size()));
    if (!out) throw IoError("idx: write failed for '" + path + "'");
}

void write_idx_labels(const std::string& path, const IdxLabels& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("idx: cannot open '" + path + "' for writing");
    write_be_u32(out, kLabelMagic);
    write_be_u32(out, static_cast<std::uint32_t>(labels.labels.size()));
    out.write(reinterpret_cast<const char*>(labels.labels.data()),
              static_cast<std::streamsize>(labels.labels.size()));
    if (!out) throw IoError("idx: write failed for '" + path + "'");
}

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    IdxImages img = read_idx_images(images_path);
    IdxLabels lbl = read_idx_labels(labels_path);
    if (img.count != lbl.labels.size())
        throw IoError("idx: image count " + std::to_string(img.count) +
                      " != label count " + std::to_string(lbl.labels.size()));
    MnistData data;
    data.rows = img.rows;
    data.cols = img.cols;
    data.images = DenseMatrix(img.count, std::size_t(img.rows) * img.cols);
    for (std::size_t i = 0; i < data.images.size(); ++i)
        data.images.data[i] = static_cast<double>(img.pixels[i]) / 255.0;
    data.labels.assign(lbl.labels.begin(), lbl.labels.end());
    return data;
}

ViewedDataset split_halves(const DenseMatrix& images, const std::vector<int>& labels) {
    if (images.cols != 784)
        throw DimensionError("split_halves: expected 28x28 images (784 columns), got " +
                             std::to_string(images.cols));
    if (!labels.empty() && labels.size() != images.rows)
        throw DimensionError("split_halves: label count does not match image count");
    ViewedDataset ds;
    ds.X = DenseMatrix(images.rows, 392);
    ds.Y = DenseMatrix(images.rows, 392);
    for (std::size_t i = 0; i < images.rows; ++i) {
        const double* img = images.row_ptr(i);
        double* left = ds.X.row_ptr(i);
        double* right = ds.Y.row_ptr(i);
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c) {
                double v = img[r * 28 + c];
                if (c < 14) left[r * 14 + c] = v;
                else right[r * 14 + (c - 14)] = v;
            }
    }
    ds.labels = labels;
    ds.manifest.binary_views = false;
    ds.manifest.name_x = "left_half";
    ds.manifest.name_y = "right_half";
    ds.manifest.provenance = "split_halves";
    return ds;
}

DenseMatrix reassemble_halves(const DenseMatrix& X, const DenseMatrix& Y) {
    if (X.rows != Y.rows || X.cols != 392 || Y.cols != 392)
        throw DimensionError("reassemble_halves: expected two n x 392 views");
    DenseMatrix out(X.rows, 784);
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double* left = X.row_ptr(i);
        const double* right = Y.row_ptr(i);
        double* img = out.row_ptr(i);
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c)
                img[r * 28 + c] = c < 14 ? left[r * 14 + c] : right[r * 14 + (c - 14)];
    }
    return out;
}

std::pair<ViewedDataset, ViewedDataset> train_val_split(const ViewedDataset& data,
                                                        std::size_t n_train,
                                                        std::uint64_t seed) {
    const std::size_t n = data.n();
    if (n_train > n)
        throw DimensionError("train_val_split: n_train " + std::to_string(n_train) +
                             " exceeds dataset size " + std::to_string(n));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);

    auto take = [&](std::size_t from, std::size_t to) {
        ViewedDataset out;
        out.X = DenseMatrix(to - from, data.X.cols);
        out.Y = DenseMatrix(to - from, data.Y.cols);
        if (!data.labels.empty()) out.labels.resize(to - from);
        for (std::size_t i = from; i < to; ++i) {
            std::size_t src = perm[i];
            std::copy(data.X.row_ptr(src), data.X.row_ptr(src) + data.X.cols,
                      out.X.row_ptr(i - from));
            std::copy(data.Y.row_ptr(src), data.Y.row_ptr(src) + data.Y.cols,
                      out.Y.row_ptr(i - from));
            if (!data.labels.empty()) out.labels[i - from] = data.labels[src];
        }
        out.manifest = data.manifest;
        return out;
    };
    return {take(0, n_train), take(n_train, n)};
}

// ---- text featurizers ----

int Vocabulary::add(const std::string& term) {
    auto it = index.find(term);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(terms.size());
    terms.push_back(term);
    index.emplace(term, id);
    return id;
}

int Vocabulary::lookup(const std::string& term) const {
    auto it = index.find(term);
    return it == index.end() ? -1 : it->second;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("vocab: cannot open '" + path + "' for writing");
    for (const std::string& t : terms) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("vocab: cannot open '" + path + "'");
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) v.add(line);
    return v;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs) {
    Vocabulary v;
    for (const auto& doc : docs)
        for (const std::string& tok : doc) v.add(tok);
    return v;
}

DenseMatrix bow_featurize(const std::vector<std::vector<std::string>>& docs,
                          const Vocabulary& vocab) {
    DenseMatrix out(docs.size(), vocab.size(), 0.0);
    for (std::size_t i = 0; i < docs.size(); ++i)
        for (const std::string& tok : docs[i]) {
            int id = vocab.lookup(tok);
            if (id >= 0) out(i, static_cast<std::size_t>(id)) = 1.0;
        }
    return out;
}

namespace {

// Splits UTF-8 into code point strings; a malformed byte stands alone.
std::vector<std::string> utf8_chars(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((c & 0x80) == 0x00) len = 1;
        else if ((c & 0xE0) == 0xC0) len = 2;
        else if ((c & 0xF0) == 0xE0) len = 3;
        else if ((c & 0xF8) == 0xF0) len = 4;
        if (i + len > s.size()) len = 1;
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

}  // namespace

std::vector<std::string> word_bigrams(const std::string& word) {
    if (word.empty()) return {};
    std::vector<std::string> chars = utf8_chars(word);
    std::vector<std::string> grams;
    grams.reserve(chars.size() + 1);
    grams.push_back("^" + chars.front());
    for (std::size_t i = 0; i + 1 < chars.size(); ++i) grams.push_back(chars[i] + chars[i + 1]);
    grams.push_back(chars.back() + "$");
    return grams;
}

Vocabulary build_bigram_vocab(const std::vector<std::string>& words) {
    Vocabulary v;
    for (const std::string& w : words)
        for (const std::string& g : word_bigrams(w)) v.add(g);
    return v;
}

DenseVector char_bigram_featurize(const std::string& word, const Vocabulary& vocab) {
    DenseVector out(vocab.size(), 0.0);
    for (const std::string& g : word_bigrams(word)) {
        int id = vocab.lookup(g);
        if (id >= 0) out[static_cast<std::size_t>(id)] = 1.0;
    }
    return out;
}

DenseVector compute_idf(const std::vector<std::vector<std::string>>& docs,
                        const Vocabulary& vocab) {
    std::vector<std::size_t> df(vocab.size(), 0);
    std::vector<char> seen(vocab.size(), 0);
    for (const auto& doc : docs) {
        std::fill(seen.begin(), seen.end(), 0);
        for (const std::string& tok : doc) {
            int id = vocab.lookup(tok);
            if (id >= 0 && !seen[static_cast<std::size_t>(id)]) {
                seen[static_cast<std::size_t>(id)] = 1;
                ++df[static_cast<std::size_t>(id)];
            }
        }
    }
    DenseVector idf(vocab.size());
    double n = static_cast<double>(docs.size());
    for (std::size_t i = 0; i < vocab.size(); ++i)
        idf[i] = std::log(n / (1.0 + static_cast<double>(df[i])));
    return idf;
}

DenseVector tfidf_doc_embedding(const std::vector<std::string>& doc_tokens,
                                const Vocabulary& vocab, const DenseVector& idf,
                                const DenseMatrix& embedding) {
    if (idf.len() != vocab.size())
        throw DimensionError("tfidf: idf length does not match vocabulary size");
    if (embedding.cols != vocab.size())
        throw DimensionError("tfidf: embedding has " + std::to_string(embedding.cols) +
                             " columns, vocabulary has " + std::to_string(vocab.size()));
    std::vector<double> tf(vocab.size(), 0.0);
    for (const std::string& tok : doc_tokens) {
        int id = vocab.lookup(tok);
        if (id >= 0) tf[static_cast<std::size_t>(id)] += 1.0;
    }
    DenseVector out(embedding.rows, 0.0);
    for (std::size_t j = 0; j < vocab.size(); ++j) {
        double w = tf[j] * idf[j];
        if (w == 0.0) continue;
        for (std::size_t r = 0; r < embedding.rows; ++r) out[r] += embedding(r, j) * w;
    }
    return out;
}

// ---- synthetic shared-latent views ----

SynthLatentData synth_shared_latent(std::size_t n, std::size_t d1, std::size_t d2,
                                    std::size_t latent_dim, double noise_sd,
                                    std::uint64_t seed) {
    if (latent_dim > std::min(d1, d2))
        throw DimensionError("synth_shared_latent: latent_dim exceeds min(d1, d2)");
    Rng master(seed);
    Rng arng = master.split(0);
    Rng brng = master.split(1);
    Rng drng = master.split(2);

    DenseMatrix A(d1, latent_dim), B(d2, latent_dim);
    for (double& v : A.data) v = arng.normal();
    for (double& v : B.data) v = brng.normal();

    SynthLatentData out;
    out.data.X = DenseMatrix(n, d1);
    out.data.Y = DenseMatrix(n, d2);
    std::vector<double> s(latent_dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : s) v = drng.normal();
        double* x = out.data.X.row_ptr(i);
        double* y = out.data.Y.row_ptr(i);
        for (std::size_t r = 0; r < d1; ++r) {
            double acc = 0.0;
            for (std::size_t m = 0; m < latent_dim; ++m) acc += A(r, m) * s[m];
            x[r] = acc + noise_sd * drng.normal();
        }
        for (std::size_t r = 0; r < d2; ++r) {
            double acc = 0.0;
            for (std::size_t m = 0; m < latent_dim; ++m) acc += B(r, m) * s[m];
            y[r] = acc + noise_sd * drng.normal();
        }
    }
    out.data.manifest.binary_views = false;
    out.data.manifest.provenance = "synth_shared_latent";

    // Population canonical correlations from the exact generating
    // covariances: Sxx = A A^T + sd^2 I, Syy = B B^T + sd^2 I, Sxy = A B^T.
    std::size_t kmin = std::min(d1, d2);
    out.true_correlations = DenseVector(kmin, 0.0);
    if (noise_sd == 0.0) {
        // Noiseless shared latent: perfect correlation on the latent span.
        for (std::size_t i = 0; i < latent_dim; ++i) out.true_correlations[i] = 1.0;
        return out;
    }
    using EM = Eigen::MatrixXd;
    EM Ae(d1, latent_dim), Be(d2, latent_dim);
    for (std::size_t r = 0; r < d1; ++r)
        for (std::size_t c = 0; c < latent_dim; ++c) Ae(r, c) = A(r, c);
    for (std::size_t r = 0; r < d2; ++r)
        for (std::size_t c = 0; c < latent_dim; ++c) Be(r, c) = B(r, c);
    EM Sxx = Ae * Ae.transpose() + noise_sd * noise_sd * EM::Identity(d1, d1);
    EM Syy = Be * Be.transpose() + noise_sd * noise_sd * EM::Identity(d2, d2);
    EM Sxy = Ae * Be.transpose();
    // rho^2 are the eigenvalues of the pencil (Sxy Syy^-1 Syx, Sxx).
    EM Mx = Sxy * Syy.ldlt().solve(Sxy.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<EM> ges(Mx, Sxx);
    if (ges.info() != Eigen::Success)
        throw NumericError("synth_shared_latent: generalized eigensolve failed");
    std::vector<double> rho2(ges.eigenvalues().data(),
                             ges.eigenvalues().data() + ges.eigenvalues().size());
    std::sort(rho2.rbegin(), rho2.rend());
    for (std::size_t i = 0; i < kmin; ++i) {
        double v = i < rho2.size() ? std::max(0.0, rho2[i]) : 0.0;
        out.true_correlations[i] = std::sqrt(std::min(1.0, v));
    }
    return out;
}

// ---- synthetic digit glyphs ----

namespace {

struct Seg {
    double x0, y0, x1, y1;
};

// Seven-segment layout in the unit square (y grows downward).
//   A: top  B: upper-right  C: lower-right  D: bottom
//   E: lower-left  F: upper-left  G: middle
const Seg kSegA{0.25, 0.12, 0.75, 0.12};
const Seg kSegB{0.75, 0.12, 0.75, 0.50};
const Seg kSegC{0.75, 0.50, 0.75, 0.88};
const Seg kSegD{0.25, 0.88, 0.75, 0.88};
const Seg kSegE{0.25, 0.50, 0.25, 0.88};
const Seg kSegF{0.25, 0.12, 0.25, 0.50};
const Seg kSegG{0.25, 0.50, 0.75, 0.50};

std::vector<Seg> glyph_segments(int digit) {
    switch (digit) {
        case 0: return {kSegA, kSegB, kSegC, kSegD, kSegE, kSegF};
        case 1: return {kSegB, kSegC};
        case 2: return {kSegA, kSegB, kSegG, kSegE, kSegD};
        case 3: return {kSegA, kSegB, kSegG, kSegC, kSegD};
        case 4: return {kSegF, kSegG, kSegB, kSegC};
        case 5: return {kSegA, kSegF, kSegG, kSegC, kSegD};
        case 6: return {kSegA, kSegF, kSegG, kSegE, kSegC, kSegD};
        case 7: return {kSegA, {0.75, 0.12, 0.45, 0.88}};
        case 8: return {kSegA, kSegB, kSegC, kSegD, kSegE, kSegF, kSegG};
        case 9: return {kSegA, kSegB, kSegF, kSegG, kSegC, kSegD};
    }
    return {};
}

double point_segment_dist(double px, double py, const Seg& s) {
    double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
    double wx = px - s.x0, wy = py - s.y0;
    double c1 = vx * wx + vy * wy;
    double c2 = vx * vx + vy * vy;
    double t = c2 > 0.0 ? std::clamp(c1 / c2, 0.0, 1.0) : 0.0;
    double dx = px - (s.x0 + t * vx), dy = py - (s.y0 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

SynthDigits synth_digits(std::size_t n, std::uint64_t seed) {
    SynthDigits out;
    out.images = DenseMatrix(n, 784, 0.0);
    out.labels.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        int digit = static_cast<int>(rng.below(10));
        out.labels[i] = digit;
        std::vector<Seg> segs = glyph_segments(digit);

        // Per-image affine jitter: scale, rotation, shear, translation,
        // per-endpoint wobble, stroke width and brightness.
        double scale = rng.uniform(0.85, 1.12);
        double theta = rng.uniform(-0.22, 0.22);
        double shear = rng.uniform(-0.15, 0.15);
        double tx = rng.uniform(-0.09, 0.09);
        double ty = rng.uniform(-0.07, 0.07);
        double thick = rng.uniform(0.045, 0.075);
        double bright = rng.uniform(0.75, 1.0);
        double ct = std::cos(theta), st = std::sin(theta);
        for (Seg& s : segs) {
            auto jolt = [&](double& x, double& y) {
                x += rng.uniform(-0.02, 0.02);
                y += rng.uniform(-0.02, 0.02);
                double cx = x - 0.5, cy = y - 0.5;
                double rx = ct * cx - st * cy + shear * cy;
                double ry = st * cx + ct * cy;
                x = 0.5 + scale * rx + tx;
                y = 0.5 + scale * ry + ty;
            };
            jolt(s.x0, s.y0);
            jolt(s.x1, s.y1);
        }

        double* img = out.images.row_ptr(i);
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c) {
                double px = (static_cast<double>(c) + 0.5) / 28.0;
                double py = (static_cast<double>(r) + 0.5) / 28.0;
                double d = 1e9;
                for (const Seg& s : segs) d = std::min(d, point_segment_dist(px, py, s));
                double v = bright / (1.0 + std::exp((d - thick) / 0.012));
                v += rng.uniform(0.0, 0.06);
                img[r * 28 + c] = std::clamp(v, 0.0, 1.0);
            }
    }
    return out;
}

}  // namespace crlkit
