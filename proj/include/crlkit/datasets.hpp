#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "crlkit/matrix.hpp"

namespace crlkit {

struct DatasetManifest {
    bool binary_views = false;
    std::string name_x = "x";
    std::string name_y = "y";
    std::string provenance;

    /// Flat key=value text file.
    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);
};

struct ViewedDataset {
    DenseMatrix X;
    DenseMatrix Y;
    std::vector<int> labels;  // may be empty
    DatasetManifest manifest;

    std::size_t n() const { return X.rows; }
};

// ---- IDX (MNIST container) ----

struct IdxImages {
    std::uint32_t count = 0, rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels;  // count*rows*cols
};

struct IdxLabels {
    std::vector<std::uint8_t> labels;
};

IdxImages read_idx_images(const std::string& path);
IdxLabels read_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, const IdxLabels& labels);

struct MnistData {
    DenseMatrix images;       // n x (rows*cols), values scaled to [0,1]
    std::vector<int> labels;  // n
    std::uint32_t rows = 0, cols = 0;
};

/// Parses an IDX image/label pair; pixels are divided by 255. Throws
/// distinct IoErrors on bad magic, truncation, and image/label count
/// mismatch.
MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Left/right half views of 28x28 row-major images (392 dims each).
ViewedDataset split_halves(const DenseMatrix& images, const std::vector<int>& labels);

/// Inverse of split_halves.
DenseMatrix reassemble_halves(const DenseMatrix& X, const DenseMatrix& Y);

/// Seeded shuffle then split into (first n_train, rest).
std::pair<ViewedDataset, ViewedDataset> train_val_split(const ViewedDataset& data,
                                                        std::size_t n_train,
                                                        std::uint64_t seed);

// ---- text featurizers ----

struct Vocabulary {
    std::vector<std::string> terms;
    std::unordered_map<std::string, int> index;

    int add(const std::string& term);             // idempotent
    int lookup(const std::string& term) const;    // -1 when absent
    std::size_t size() const { return terms.size(); }

    /// One term per line; line number = index.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);
};

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs);

/// Binary bag-of-words rows; out-of-vocabulary tokens are ignored.
DenseMatrix bow_featurize(const std::vector<std::vector<std::string>>& docs,
                          const Vocabulary& vocab);

/// Character bigrams of a word wrapped in boundary sentinels '^' and '$'
/// (UTF-8 aware: bigrams are over code points).
std::vector<std::string> word_bigrams(const std::string& word);
Vocabulary build_bigram_vocab(const std::vector<std::string>& words);
DenseVector char_bigram_featurize(const std::string& word, const Vocabulary& vocab);

/// idf_i = ln(N / (1 + df_i)) over the reference corpus.
DenseVector compute_idf(const std::vector<std::vector<std::string>>& docs,
                        const Vocabulary& vocab);

/// embedding (k x d) times the tf*idf weight vector of the document; tf is
/// the raw in-document count.
DenseVector tfidf_doc_embedding(const std::vector<std::string>& doc_tokens,
                                const Vocabulary& vocab, const DenseVector& idf,
                                const DenseMatrix& embedding);

// ---- synthetic generators ----

struct SynthLatentData {
    ViewedDataset data;
    DenseVector true_correlations;  // min(d1,d2) population canonical corrs
};

/// x = A s + noise, y = B s + noise with a shared latent s ~ N(0, I).
/// Returns the population canonical correlations of the generating
/// covariance, computed from the generalized eigenproblem on the exact
/// covariance matrices (independent of any sample).
SynthLatentData synth_shared_latent(std::size_t n, std::size_t d1, std::size_t d2,
                                    std::size_t latent_dim, double noise_sd,
                                    std::uint64_t seed);

struct SynthDigits {
    DenseMatrix images;  // n x 784, values in [0,1]
    std::vector<int> labels;
};

/// Seeded 28x28 ten-class glyph corpus (stroke prototypes under random
/// affine jitter and noise). A stand-in two-view workload for pipeline
/// tests when the real MNIST files are not on disk.
SynthDigits synth_digits(std::size_t n, std::uint64_t seed);

}  // namespace crlkit
