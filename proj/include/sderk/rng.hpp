/*
   Copyright 2026 The sderk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sderk {

__extension__ typedef unsigned __int128 uint128_t;
__extension__ typedef __int128 int128_t;

/// Philox4x64-10 counter-based block cipher (Salmon et al., SC'11).
class Philox4x64 {
public:
    using counter_type = std::array<std::uint64_t, 4>;
    using key_type = std::array<std::uint64_t, 2>;

    static counter_type block(counter_type ctr, key_type key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const uint128_t p0 = static_cast<uint128_t>(kMul0) * ctr[0];
            const uint128_t p1 = static_cast<uint128_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
            const auto lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
            const auto lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
};

/// Stream of standard normal deviates keyed by (seed, stream index).
///
/// Deviate number i depends only on (seed, stream, i): block i/4 of the
/// Philox sequence is turned into four normals by Box-Muller.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept : key_{seed, stream} {}

    double normal() noexcept {
        const std::uint64_t blk = counter_ / 4;
        if (blk != cached_block_) refill(blk);
        return cache_[counter_++ % 4];
    }

    std::uint64_t draws() const noexcept { return counter_; }
    std::uint64_t seed() const noexcept { return key_[0]; }
    std::uint64_t stream() const noexcept { return key_[1]; }

    /// Repositions the stream; the next normal() is deviate number `counter`.
    void seek(std::uint64_t counter) noexcept { counter_ = counter; }

private:
    // (0, 1]: never zero so the logarithm stays finite.
    static double unit(std::uint64_t u) noexcept {
        return static_cast<double>((u >> 11) + 1) * 0x1.0p-53;
    }

    void refill(std::uint64_t blk) {
        const auto r = Philox4x64::block({blk, 0, 0, 0}, key_);
        for (int pair = 0; pair < 2; ++pair) {
            const double rad = std::sqrt(-2.0 * std::log(unit(r[2 * pair])));
            const double theta = 2.0 * std::numbers::pi * unit(r[2 * pair + 1]);
            cache_[2 * pair] = rad * std::cos(theta);
            cache_[2 * pair + 1] = rad * std::sin(theta);
        }
        cached_block_ = blk;
    }

    Philox4x64::key_type key_;
    std::uint64_t counter_ = 0;
    std::uint64_t cached_block_ = ~std::uint64_t{0};
    std::array<double, 4> cache_{};
};

} // namespace sderk
