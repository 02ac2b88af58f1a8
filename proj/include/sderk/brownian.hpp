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

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sderk/error.hpp"
#include "sderk/rng.hpp"

namespace sderk {

/// Wiener increment held as a signed fixed-point number with 100 fractional bits.
///
/// Integer arithmetic makes splitting and merging exact inverses: the two
/// halves of a split always add back to the parent bit for bit.
class WienerAmount {
public:
    static constexpr int fraction_bits = 100;

    constexpr WienerAmount() = default;

    static WienerAmount from_double(double v) {
        if (!std::isfinite(v) || std::abs(v) >= 0x1.0p26) {
            throw BrownianError("Wiener increment out of fixed-point range: " + std::to_string(v));
        }
        return WienerAmount(static_cast<int128_t>(std::nearbyint(std::ldexp(v, fraction_bits))));
    }

    double to_double() const noexcept {
        return std::ldexp(static_cast<double>(quanta_), -fraction_bits);
    }

    /// Floor of half the amount.
    WienerAmount half() const noexcept { return WienerAmount(quanta_ >> 1); }

    friend WienerAmount operator+(WienerAmount x, WienerAmount y) noexcept {
        return WienerAmount(x.quanta_ + y.quanta_);
    }
    friend WienerAmount operator-(WienerAmount x, WienerAmount y) noexcept {
        return WienerAmount(x.quanta_ - y.quanta_);
    }
    friend bool operator==(WienerAmount, WienerAmount) = default;

private:
    constexpr explicit WienerAmount(int128_t q) : quanta_(q) {}
    int128_t quanta_ = 0;
};

/// Maps integer ticks to time: t = origin + tick * tick_size.
struct TimeGrid {
    double origin = 0.0;
    double tick_size = 1.0;

    double time(std::int64_t tick) const noexcept {
        return origin + static_cast<double>(tick) * tick_size;
    }
    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

inline constexpr int default_max_depth = 40;

/// Time interval [t0, t0 + dt] with its m Wiener increments.
struct IncrementNode {
    TimeGrid grid;
    std::int64_t start = 0;  // ticks
    std::int64_t length = 0; // ticks
    std::vector<WienerAmount> dW;

    double t0() const noexcept { return grid.time(start); }
    double t1() const noexcept { return grid.time(start + length); }
    double dt() const noexcept { return static_cast<double>(length) * grid.tick_size; }
    std::size_t m() const noexcept { return dW.size(); }

    std::vector<double> dW_values() const {
        std::vector<double> out(dW.size());
        for (std::size_t k = 0; k < dW.size(); ++k) out[k] = dW[k].to_double();
        return out;
    }

    /// Standalone node over [t0, t0 + dt], refinable `depth` times.
    static IncrementNode make(double t0, double dt, std::span<const double> increments,
                              int depth = default_max_depth) {
        if (!(dt > 0.0)) throw PreconditionError("increment node needs dt > 0");
        IncrementNode node;
        node.grid = {t0, std::ldexp(dt, -depth)};
        node.start = 0;
        node.length = std::int64_t{1} << depth;
        node.dW.reserve(increments.size());
        for (double v : increments) node.dW.push_back(WienerAmount::from_double(v));
        return node;
    }
};

/// m independent N(0, dt) draws.
inline std::vector<double> sample_increment(RngStream& rng, double dt, std::size_t m) {
    if (dt < 0.0) throw PreconditionError("sample_increment needs dt >= 0");
    const double scale = std::sqrt(dt);
    std::vector<double> out(m);
    for (auto& v : out) v = scale * rng.normal();
    return out;
}

/// Conditional split with the standard-normal deviates supplied by the caller.
///
/// Left child: dW_a = dW/2 + sqrt(dt/4) z, i.e. N(dW/2, dt/4) given dW.
/// Right child: dW_b = dW - dW_a, exact.
inline std::pair<IncrementNode, IncrementNode> split_node_with(const IncrementNode& node,
                                                               std::span<const double> z) {
    if (node.length < 2 || node.length % 2 != 0) {
        throw BrownianError("node at t=" + std::to_string(node.t0())
                            + " cannot be refined further (dyadic depth exhausted)");
    }
    if (z.size() != node.m()) throw DimensionError("split needs one deviate per Wiener process");
    const double sd = 0.5 * std::sqrt(node.dt());
    IncrementNode left{node.grid, node.start, node.length / 2, {}};
    IncrementNode right{node.grid, node.start + node.length / 2, node.length / 2, {}};
    left.dW.reserve(node.m());
    right.dW.reserve(node.m());
    for (std::size_t k = 0; k < node.m(); ++k) {
        const WienerAmount a = node.dW[k].half() + WienerAmount::from_double(sd * z[k]);
        left.dW.push_back(a);
        right.dW.push_back(node.dW[k] - a);
    }
    return {std::move(left), std::move(right)};
}

inline std::pair<IncrementNode, IncrementNode> split_node(RngStream& rng,
                                                          const IncrementNode& node) {
    if (!(node.dt() > 0.0)) throw PreconditionError("split_node needs dt > 0");
    std::vector<double> z(node.m());
    for (auto& v : z) v = rng.normal();
    return split_node_with(node, z);
}

/// Union of two adjacent intervals; increments add.
inline IncrementNode merge_nodes(const IncrementNode& left, const IncrementNode& right) {
    if (left.m() != right.m()) throw DimensionError("merging nodes with different Wiener counts");
    std::int64_t right_start = right.start;
    std::int64_t right_length = right.length;
    if (!(right.grid == left.grid)) {
        // Re-express the right node on the left node's tick grid when exact.
        const double offset = (right.t0() - left.grid.origin) / left.grid.tick_size;
        const double len = right.dt() / left.grid.tick_size;
        if (offset != std::nearbyint(offset) || len != std::nearbyint(len) || len <= 0.0
            || std::abs(offset) >= 0x1.0p62 || len >= 0x1.0p62) {
            throw BrownianError("intervals are not contiguous");
        }
        right_start = static_cast<std::int64_t>(offset);
        right_length = static_cast<std::int64_t>(len);
    }
    if (right_start != left.start + left.length) {
        throw BrownianError("intervals are not contiguous: left ends at "
                            + std::to_string(left.t1()) + ", right starts at "
                            + std::to_string(right.t0()));
    }
    IncrementNode out{left.grid, left.start, left.length + right_length, {}};
    out.dW.reserve(left.m());
    for (std::size_t k = 0; k < left.m(); ++k) out.dW.push_back(left.dW[k] + right.dW[k]);
    return out;
}

/// Binary Brownian tree of one trajectory: pending refined intervals plus the
/// horizon beyond which no increments exist yet.
///
/// Times are integer ticks; the base step H spans 2^max_depth ticks and every
/// node length is H / 2^k. The tree is addressed by node position: the root
/// increments of chunk c and the split deviates of every node are read from
/// fixed counter positions of the stream, so a trajectory sees the same
/// Brownian path whatever sequence of step sizes the controller asks for.
class BrownianStack {
public:
    BrownianStack(double t0, double base_step, std::size_t m, int max_depth = default_max_depth)
        : grid_{t0, std::ldexp(base_step, -max_depth)}, m_(m), max_depth_(max_depth),
          base_ticks_(std::int64_t{1} << max_depth) {
        if (!(base_step > 0.0)) throw PreconditionError("base step must be positive");
        if (max_depth < 0 || max_depth > 52) throw PreconditionError("max_depth must be in [0, 52]");
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t m() const noexcept { return m_; }
    int max_depth() const noexcept { return max_depth_; }
    std::int64_t base_ticks() const noexcept { return base_ticks_; }
    std::int64_t horizon() const noexcept { return horizon_; }
    double horizon_time() const noexcept { return grid_.time(horizon_); }
    bool empty() const noexcept { return pending_.empty(); }
    std::size_t pending() const noexcept { return pending_.size(); }
    const IncrementNode& top() const { return pending_.back(); }

    /// Returns an interval to be integrated back (rejection or look-ahead).
    void push(IncrementNode node) { pending_.push_back(std::move(node)); }

    /// Next interval for a step of length H / 2^level.
    ///
    /// Pending nodes are replayed first: a longer top node is split until it
    /// fits, a shorter one is merged with its pending sibling when that yields
    /// the requested length. With nothing pending, the next whole chunk is
    /// drawn at the horizon and refined the same way.
    IncrementNode next_node(RngStream& rng, int level) {
        if (level < 0 || level > max_depth_) {
            throw BrownianError("step level " + std::to_string(level) + " outside [0, "
                                + std::to_string(max_depth_) + "]");
        }
        const std::int64_t want = base_ticks_ >> level;
        if (pending_.empty()) pending_.push_back(draw_chunk(rng));
        IncrementNode node = std::move(pending_.back());
        pending_.pop_back();
        while (node.length > want) {
            auto [left, right] = split_node_with(node, split_deviates(rng, node));
            pending_.push_back(std::move(right));
            node = std::move(left);
        }
        if (node.length < want && !pending_.empty()) {
            const IncrementNode& sib = pending_.back();
            if (sib.length == node.length && sib.start == node.start + node.length
                && node.start % (2 * node.length) == 0 && 2 * node.length <= want) {
                node = merge_nodes(node, sib);
                pending_.pop_back();
            }
        }
        return node;
    }

    /// Same as next_node(rng, level) with the step given as a time span.
    IncrementNode next_node(RngStream& rng, double proposed_dt) {
        return next_node(rng, level_of(proposed_dt));
    }

    /// k such that dt == H / 2^k exactly; throws when dt is not dyadic.
    int level_of(double dt) const {
        const double ratio = dt / (static_cast<double>(base_ticks_) * grid_.tick_size);
        int exp = 0;
        const double mant = std::frexp(ratio, &exp);
        if (!(ratio > 0.0) || mant != 0.5 || exp > 1 || 1 - exp > max_depth_) {
            throw BrownianError("step " + std::to_string(dt)
                                + " is not a dyadic fraction H/2^k of the base step");
        }
        return 1 - exp;
    }

private:
    // Node address: chunk * 2^(max_depth + 1) + heap index within the chunk
    // (1 for the chunk itself); heap index 0 addresses the chunk's root draw.
    std::uint64_t address(std::int64_t start, std::int64_t length, bool root) const {
        const auto chunk = static_cast<std::uint64_t>(start / base_ticks_);
        std::uint64_t heap = 0;
        if (!root) {
            const int lvl = max_depth_ - std::countr_zero(static_cast<std::uint64_t>(length));
            heap = (std::uint64_t{1} << lvl)
                   + static_cast<std::uint64_t>((start % base_ticks_) / length);
        }
        const int shift = max_depth_ + 1;
        if (chunk >= (std::uint64_t{1} << (63 - shift))) {
            throw BrownianError("trajectory too long for the Brownian tree address space");
        }
        const std::uint64_t id = (chunk << shift) + heap;
        if (m_ > 0 && id > ~std::uint64_t{0} / m_) {
            throw BrownianError("Brownian tree address space exhausted");
        }
        return id * m_;
    }

    std::vector<double> split_deviates(RngStream& rng, const IncrementNode& node) const {
        rng.seek(address(node.start, node.length, false));
        std::vector<double> z(m_);
        for (auto& v : z) v = rng.normal();
        return z;
    }

    IncrementNode draw_chunk(RngStream& rng) {
        rng.seek(address(horizon_, base_ticks_, true));
        IncrementNode node{grid_, horizon_, base_ticks_, {}};
        const auto dW = sample_increment(rng, static_cast<double>(base_ticks_) * grid_.tick_size, m_);
        node.dW.reserve(m_);
        for (double v : dW) node.dW.push_back(WienerAmount::from_double(v));
        horizon_ += base_ticks_;
        return node;
    }

    TimeGrid grid_;
    std::size_t m_;
    int max_depth_;
    std::int64_t base_ticks_;
    std::int64_t horizon_ = 0;
    std::vector<IncrementNode> pending_;
};

} // namespace sderk
