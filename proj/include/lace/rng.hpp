#pragma once

// Counter-based pseudo-randomness: every value is a pure function of the
// seeds that went in, which keeps simulations reproducible under any
// traversal or thread order.

#include <cstdint>

namespace lace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stateless mix of up to four words (hash chaining through splitmix64).
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                           std::uint64_t d = 0) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s ^= b + 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= c + 0xc2b2ae3d27d4eb4fULL;
    h ^= splitmix64(s);
    s ^= d + 0x165667b19e3779f9ULL;
    h ^= splitmix64(s);
    return h;
}

// Uniform double in [0,1) from the top 53 bits.
inline double u01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace lace
