#pragma once

#include <cstdint>
#include <random>

namespace toma {

using Rng = std::mt19937_64;

// splitmix64; used to turn (seed, stream) into decorrelated engine seeds so
// every component of a run owns its own deterministic stream.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(mix64(mix64(seed) ^ stream));
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <typename Int>
Int uniform_int(Rng& rng, Int lo, Int hi) {  // inclusive bounds
    return std::uniform_int_distribution<Int>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace toma
