#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vanet {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for the labeled substream of a run. Adding a new label never shifts
/// the draws of existing ones.
constexpr std::uint64_t substream_seed(std::uint64_t root, std::string_view label) {
    return splitmix64(root ^ splitmix64(fnv1a64(label)));
}

inline Rng substream(std::uint64_t root, std::string_view label) {
    return Rng{substream_seed(root, label)};
}

/// Counter-based uniform in [0, 1): same (seed, a, b) always gives the same value,
/// independent of call order.
constexpr double hash_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace vanet
