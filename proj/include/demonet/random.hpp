#pragma once

#include <cstdint>
#include <random>

namespace demonet {

// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives independent child seeds from one master seed.
class SeedSplitter {
public:
    explicit SeedSplitter(std::uint64_t master) : master_(master) {}

    std::uint64_t data() const { return child(1); }
    std::uint64_t init() const { return child(2); }
    std::uint64_t dropout() const { return child(3); }
    std::uint64_t hash() const { return child(4); }
    std::uint64_t split() const { return child(5); }

    std::uint64_t child(std::uint64_t stream) const { return mix64(master_ ^ mix64(stream)); }

private:
    std::uint64_t master_;
};

using Rng = std::mt19937_64;

// Portable uniform in [0,1); std::uniform_real_distribution is implementation-defined.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, bound) without modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

template <typename It>
void shuffle(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        std::swap(first[i - 1], first[uniform_index(rng, i)]);
    }
}

}  // namespace demonet
