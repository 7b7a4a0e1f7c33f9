#pragma once

#include <cstdint>

namespace evdr {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent stream seeds: the result depends only on (seed, stream, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

namespace streams {
inline constexpr std::uint64_t kTraining = 0x7261696eull;
inline constexpr std::uint64_t kFleet = 0x666c6565ull;
inline constexpr std::uint64_t kPlugIn = 0x706c7567ull;
inline constexpr std::uint64_t kKMeans = 0x6b6d6561ull;
inline constexpr std::uint64_t kValuation = 0x76616c75ull;
}  // namespace streams

}  // namespace evdr
