#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hefl {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Keyed mixing function used for stream derivation and pairwise PRGs.
inline std::uint64_t mix3(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(splitmix64(key ^ splitmix64(a)) ^ (b * 0xd6e8feb86659fd93ULL));
}

/// Seeded generator with platform-independent output.
///
/// std::mt19937_64 has a standardized output sequence; the <random>
/// distributions do not, so the bounded and real draws are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    double normal();
    /// Gamma(shape, 1) via Marsaglia-Tsang.
    double gamma(double shape);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent child stream; the same (seed, stream) always yields the same child.
    Rng fork(std::uint64_t stream) const { return Rng(mix3(seed_, stream, 0x5eed)); }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace hefl
