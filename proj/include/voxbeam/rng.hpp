// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_RNG_HPP
#define VOXBEAM_RNG_HPP

#include <cstdint>
#include <initializer_list>

namespace voxbeam {

inline constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a list of counters into one 64-bit key.
inline constexpr uint64_t hash_counters(std::initializer_list<uint64_t> keys) {
    uint64_t h = 0x6a09e667f3bcc909ULL;
    for (uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
    return h;
}

/// PCG32 (XSH-RR). Streams are keyed by counters so results never depend on
/// which worker draws them.
class Rng {
public:
    Rng() : Rng(0, 0) {}
    Rng(uint64_t seed, uint64_t stream) {
        inc_ = (stream << 1u) | 1u;
        state_ = 0;
        next_u32();
        state_ += seed;
        next_u32();
    }
    static Rng keyed(std::initializer_list<uint64_t> keys) {
        uint64_t h = hash_counters(keys);
        return Rng(h, splitmix64(h));
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        auto xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        auto rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31));
    }

    /// Uniform in [0, 1).
    double uniform() {
        uint64_t hi = next_u32();
        uint64_t lo = next_u32();
        return double(((hi << 21) ^ lo) & ((1ULL << 53) - 1)) * 0x1.0p-53;
    }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
};

}  // namespace voxbeam

#endif
