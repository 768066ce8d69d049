#pragma once

#include <cstdint>
#include <random>

namespace tgdr {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based child seed: independent of the order in which children are
// created.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

// Streams used across the library.
enum : std::uint64_t {
    kStreamFolds = 1,
    kStreamBootstrap = 2,
    kStreamSimTrain = 3,
    kStreamSimTest = 4,
    kStreamReplicate = 5,
};

}  // namespace tgdr
