#pragma once

// Counter-based random number generator: Philox4x32-10 (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3", SC 2011). Pure integer
// arithmetic, so streams are bit-identical on every platform. Platform
// generators (std::mt19937 etc.) are deliberately not used anywhere.

#include <array>
#include <cstdint>
#include <string_view>

#include "wplab/errors.hpp"
#include "wplab/util.hpp"

namespace wplab {

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

} // namespace detail

class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    Philox4x32() = default;

    explicit Philox4x32(std::uint64_t seed) {
        key_[0] = static_cast<std::uint32_t>(seed);
        key_[1] = static_cast<std::uint32_t>(seed >> 32);
    }

    // One keyed bijection of the 128-bit counter. 10 rounds, key bumped
    // between rounds; matches the Random123 reference outputs.
    static Block block(const Block& counter, std::uint32_t key0, std::uint32_t key1) {
        Block x = counter;
        std::uint32_t k0 = key0, k1 = key1;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += 0x9E3779B9u; // golden ratio
                k1 += 0xBB67AE85u; // sqrt(3)-1
            }
            std::uint32_t lo0, hi0, lo1, hi1;
            detail::mulhilo32(0xD2511F53u, x[0], lo0, hi0);
            detail::mulhilo32(0xCD9E8D57u, x[2], lo1, hi1);
            x = Block{hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
        }
        return x;
    }

    std::uint32_t next_u32() {
        if (index_ == 4) {
            buffer_ = block(counter_, key_[0], key_[1]);
            advance_counter();
            index_ = 0;
        }
        return buffer_[index_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    void advance_counter() {
        for (int i = 0; i < 4; ++i) {
            if (++counter_[i] != 0) break;
        }
    }

    std::array<std::uint32_t, 2> key_{0, 0};
    Block counter_{0, 0, 0, 0};
    Block buffer_{0, 0, 0, 0};
    int index_ = 4;
};

// Stable stream derivation: seed = mix64(mix64(master ^ fnv1a64(label)) +
// (index + 1) * golden64). Distinct labels and indices give independent
// Philox keys; the mapping is part of the output-reproducibility contract
// and must not change between versions.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream_label,
                                 std::uint64_t index) {
    const std::uint64_t golden64 = 0x9E3779B97F4A7C15ull;
    std::uint64_t h = mix64(master ^ fnv1a64(stream_label));
    return mix64(h + (index + 1) * golden64);
}

inline Philox4x32 stream_rng(std::uint64_t master, std::string_view label, std::uint64_t index) {
    return Philox4x32(derive_seed(master, label, index));
}

} // namespace wplab
