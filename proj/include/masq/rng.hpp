#pragma once

#include <cstdint>
#include <string>

namespace masq {

// SplitMix64: the fixed generator behind every synthetic tensor and test
// vector. Pure integer arithmetic, so streams are identical on any platform.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Uniform integer in [lo, hi].
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next() % static_cast<uint64_t>(hi - lo + 1));
    }
};

// FNV-1a over a label, folded with a seed: stable stream keys for named
// tensors.
inline uint64_t stream_key(uint64_t seed, const std::string& label) {
    uint64_t h = 0xCBF29CE484222325ULL ^ seed;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace masq
