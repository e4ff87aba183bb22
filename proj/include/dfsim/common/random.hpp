#pragma once

#include <cstdint>

namespace dfsim {

// Counter-based uniform generator built on the SplitMix64 finalizer
// (Steele, Lea & Flood 2014). A draw is a pure function of
// (seed, stream, index), so results do not depend on visitation order,
// thread count, or the standard library in use:
//
//   key   = mix(seed ^ (stream * 0x9E3779B97F4A7C15))
//   bits  = mix(key + (index + 1) * 0x9E3779B97F4A7C15)
//   u     = (bits >> 11) * 2^-53                      in [0, 1)
//
// where mix is the SplitMix64 output function.

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Named streams keep independent uses of one seed decorrelated.
enum class RandomStream : std::uint64_t {
    InitiationPoints = 1,
    FalsePositives = 2,
    Cutout = 3,
    DemoTerrain = 4,
    DemoLabels = 5,
    DemoVegetation = 6,
};

class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, RandomStream stream) noexcept
        : key_(splitmix64_mix(seed ^ (static_cast<std::uint64_t>(stream) * kGoldenGamma))) {}

    constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
        return splitmix64_mix(key_ + (index + 1) * kGoldenGamma);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t index) const noexcept {
        return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi] (inclusive) as lo + floor(u * (hi - lo + 1)).
    /// The bias is below 2^-40 for ranges under 2^13.
    constexpr std::int64_t uniform_int(std::uint64_t index, std::int64_t lo, std::int64_t hi) const noexcept {
        const auto span = static_cast<double>(hi - lo + 1);
        const auto k = static_cast<std::int64_t>(uniform(index) * span);
        return lo + (k > hi - lo ? hi - lo : k);
    }

private:
    std::uint64_t key_;
};

}  // namespace dfsim
