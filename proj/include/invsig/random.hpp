#pragma once

#include <cstdint>
#include <random>

namespace invsig {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent child seeds from a parent seed
// so that every random consumer gets its own stream.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
    return mix_seed(mix_seed(seed ^ mix_seed(stream)) + index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace invsig
