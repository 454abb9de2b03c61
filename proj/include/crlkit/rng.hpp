#pragma once

#include <cstdint>
#include <vector>

namespace crlkit {

/// Deterministic 64-bit random generator (splitmix64 core).
///
/// Identical seeds produce identical streams. split(tag) derives an
/// independent child stream from the original seed and the tag, regardless
/// of how many values the parent has already drawn, so sub-experiments can
/// be reseeded reproducibly from one master seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no caching; two draws per value).
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Child generator for the given stream tag; independent of draw position.
    Rng split(std::uint64_t tag) const;

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

}  // namespace crlkit
