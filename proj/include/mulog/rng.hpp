#pragma once

#include <cstdint>

namespace mulog {

// Counter-based generator: Philox 4x32 with 10 rounds (Salmon et al. 2011).
// State is (seed, stream, block counter); any (seed, stream) pair yields an
// independent reproducible sequence, so samplers can hand one stream to each
// pixel and stay deterministic under any parallel schedule.
//
// Cross-language reproduction contract:
//   key     = (lo32(seed), hi32(seed)), bumped per round by 0x9E3779B9 / 0xBB67AE85
//   counter = (lo32(n), hi32(n), lo32(stream), hi32(stream)), n = block index
//   round   multipliers 0xD2511F53, 0xCD9E8D57
//   each block yields 4 uint32 words x0..x3, consumed in order
//   uniform double: u64 = x_even | x_odd<<32; u = ((u64 >> 11) + 0.5) * 2^-53
//   normal pair (Box-Muller): r = sqrt(-2 ln u1); z0 = r cos(2 pi u2),
//     z1 = r sin(2 pi u2)
//   gamma(shape k >= 1): Marsaglia-Tsang squeeze; draws one normal plus one
//     uniform per attempt, repeating on rejection
//   gamma(k < 1): gamma(k + 1) * u^(1/k) with one extra uniform
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream) noexcept;

    double uniform();                 // in (0, 1), never exactly 0 or 1
    double normal();                  // standard normal
    double gamma(double shape);       // unit scale, shape > 0

private:
    void refill() noexcept;

    std::uint32_t key_[2];
    std::uint32_t ctr_[4];
    std::uint32_t buf_[4];
    int have_ = 0;                    // unread words left in buf_
    double spare_ = 0.0;              // cached second Box-Muller normal
    bool has_spare_ = false;
};

} // namespace mulog
