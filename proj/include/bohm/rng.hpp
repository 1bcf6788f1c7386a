#pragma once

#include <cstdint>
#include <random>

namespace bohm {

/// SplitMix64 finalizer; used only to derive substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream-splitting rule: substream `index` of master `seed` is a
/// std::mt19937_64 seeded with splitmix64(splitmix64(seed) ^ index').
/// mt19937_64 output is fully specified by the standard, so substreams are
/// bitwise reproducible across platforms and independent of how work is
/// scheduled across threads.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64{splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

/// Uniform double in [0, 1) from the top 53 bits (portable, unlike
/// std::uniform_real_distribution whose algorithm is unspecified).
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace bohm
