#include "crlkit/rng.hpp"

#include <cmath>

namespace crlkit {

double Rng::normal() {
    // u1 in (0, 1] so log stays finite.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling to avoid modulo bias.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

Rng Rng::split(std::uint64_t tag) const {
    // Re-mix the original seed with the tag so children are stable under
    // parent draws.
    std::uint64_t z = seed_ ^ (0x9E3779B97F4A7C15ULL * (tag + 0x632BE59BD9B4E019ULL));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return Rng(z ^ (z >> 31));
}

}  // namespace crlkit
