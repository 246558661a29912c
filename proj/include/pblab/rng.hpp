#pragma once
#include <cstdint>
#include <random>

namespace pblab::rng {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the (trial, stream) substream; independent of the order trials run in.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) noexcept
{
    return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ (stream * 0xD1B54A32D192ED03ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream)
{
    return Engine(substream_seed(seed, trial, stream));
}

} // namespace pblab::rng
