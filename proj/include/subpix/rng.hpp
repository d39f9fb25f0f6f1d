#pragma once

#include <cstdint>
#include <random>

namespace subpix {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for trial `index` of logical stream `stream` under a master
/// seed. Results depend only on (seed, stream, index), never on scheduling.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ (stream * 0xd1b54a32d192ed03ULL));
    s = splitmix64(s ^ index);
    return std::mt19937_64(s);
}

}  // namespace subpix
