#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rsgda {

// All randomness in a run flows from one seed through named substreams
// (init, dropout, synthetic, split). The name hash is FNV-1a so streams
// stay stable across builds, unlike std::hash.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 substream(uint64_t seed, std::string_view name) {
    return std::mt19937_64(splitmix64(seed ^ fnv1a64(name)));
}

} // namespace rsgda
