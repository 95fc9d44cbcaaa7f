#pragma once

#include <array>
#include <cstdint>

namespace fdmlmc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += W0;
            key[1] += W1;
        }
        return ctr;
    }

    static Key key_from(std::uint64_t seed) noexcept {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }

    // Uniform double in [0, 1) from 53 random bits.
    static double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
        const std::uint64_t u = (std::uint64_t{hi} << 32) | lo;
        return static_cast<double>(u >> 11) * 0x1.0p-53;
    }
};

} // namespace fdmlmc
