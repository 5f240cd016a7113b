#pragma once

#include <cstdint>

namespace ivkit {

/// SplitMix64 output function.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for stream `index` under `master`: the SplitMix64 counter stream
/// started at splitmix64(master), advanced index + 1 steps. Streams depend only
/// on (master, index), never on execution order.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) + index * 0x9E3779B97F4A7C15ULL);
}

}  // namespace ivkit
