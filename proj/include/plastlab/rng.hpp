#pragma once

#include <cstdint>
#include <random>

namespace plastlab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Named sub-streams of a run's master seed. Keeping every consumer on its
/// own stream makes run trajectories independent of incidental draw counts.
namespace streams {
constexpr std::uint64_t init = 1;
constexpr std::uint64_t permutation = 2;
constexpr std::uint64_t shuffle = 3;
constexpr std::uint64_t reinit = 4;
constexpr std::uint64_t probe = 5;
constexpr std::uint64_t subsample = 6;
constexpr std::uint64_t synth = 7;
} // namespace streams

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ (stream * 0xd1b54a32d192ed03ULL)) ^
                      (index * 0x2545f4914f6cdd1dULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

inline Rng make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(derive_seed(master, stream, index));
}

} // namespace plastlab
