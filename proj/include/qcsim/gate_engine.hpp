// Copyright 2026 The qcsim developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file gate_engine.hpp
 * @brief Applies gates to the block-partitioned state.
 *
 * Planning maps a gate onto the index layout once: the target qubit's
 * segment decides the pairing shape (within a block, across two blocks, or
 * across two ranks) and each control qubit turns into a mask in its own
 * segment. A control in the offset field masks amplitudes inside a buffer;
 * a control in the block-id field excludes whole blocks untouched; a
 * control in the rank-id field idles whole ranks.
 */

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qcsim/blockstore.hpp"
#include "qcsim/codec.hpp"
#include "qcsim/common.hpp"
#include "qcsim/gates.hpp"
#include "qcsim/layout.hpp"

namespace qcsim {

// ---------------------------------------------------------------------------
// Planning.
// ---------------------------------------------------------------------------

/// How a gate's controls restrict work, by segment. A multi-control gate
/// can carry several of these at once.
enum class ControlAction : std::uint8_t {
    ApplyAll = 0,
    SkipWhereControlZero = 1 << 0, ///< mask inside block buffers
    SkipWholeBlocks = 1 << 1,      ///< control in the block-id field
    SkipWholeRanks = 1 << 2,       ///< control in the rank-id field
};

/// Precomputed application recipe for one gate under one layout.
struct GatePlan {
    QubitLocality locality = QubitLocality::InBlock;
    std::uint64_t offset_ctrl_mask = 0;
    std::uint64_t block_ctrl_mask = 0;
    std::uint32_t rank_ctrl_mask = 0;
    std::uint64_t target_offset_bit = 0; ///< set iff locality == InBlock
    std::uint64_t target_block_bit = 0;  ///< set iff locality == CrossBlockSameRank
    std::uint32_t target_rank_bit = 0;   ///< set iff locality == CrossRank
    std::uint8_t actions = 0;            ///< ControlAction flags

    bool has_action(ControlAction a) const noexcept {
        return (actions & static_cast<std::uint8_t>(a)) != 0;
    }

    /// A rank participates unless one of its rank-segment control bits is 0.
    bool rank_active(std::uint32_t rank) const noexcept {
        return (rank & rank_ctrl_mask) == rank_ctrl_mask;
    }

    /// A block participates unless one of its block-segment control bits is 0.
    bool block_active(std::uint64_t block) const noexcept {
        return (block & block_ctrl_mask) == block_ctrl_mask;
    }

    std::uint32_t partner_rank(std::uint32_t rank) const noexcept { return rank ^ target_rank_bit; }
};

inline GatePlan plan_gate(const Gate &gate, const RankLayout &layout) {
    if (gate.target >= layout.qubits()) {
        throw ArgumentError("plan_gate: target qubit out of range");
    }
    GatePlan plan;
    plan.locality = classify_qubit(gate.target, layout);
    switch (plan.locality) {
    case QubitLocality::InBlock:
        plan.target_offset_bit = std::uint64_t{1} << gate.target;
        break;
    case QubitLocality::CrossBlockSameRank:
        plan.target_block_bit = std::uint64_t{1} << (gate.target - layout.offset_bits());
        break;
    case QubitLocality::CrossRank:
        plan.target_rank_bit = std::uint32_t{1}
                               << (gate.target - layout.offset_bits() - layout.block_bits());
        break;
    }
    for (unsigned c : gate.controls) {
        switch (classify_qubit(c, layout)) {
        case QubitLocality::InBlock:
            plan.offset_ctrl_mask |= std::uint64_t{1} << c;
            plan.actions |= static_cast<std::uint8_t>(ControlAction::SkipWhereControlZero);
            break;
        case QubitLocality::CrossBlockSameRank:
            plan.block_ctrl_mask |= std::uint64_t{1} << (c - layout.offset_bits());
            plan.actions |= static_cast<std::uint8_t>(ControlAction::SkipWholeBlocks);
            break;
        case QubitLocality::CrossRank:
            plan.rank_ctrl_mask |= std::uint32_t{1}
                                   << (c - layout.offset_bits() - layout.block_bits());
            plan.actions |= static_cast<std::uint8_t>(ControlAction::SkipWholeRanks);
            break;
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Kernels. apply_pair is the one place gate arithmetic happens; its exact
// expression shape is part of the reproducibility contract, so keep it in
// sync with nothing and change nothing.
// ---------------------------------------------------------------------------

inline void apply_pair(const GateMatrix &u, Amplitude &a0, Amplitude &a1) {
    const Amplitude t0 = u[0] * a0 + u[1] * a1;
    const Amplitude t1 = u[2] * a0 + u[3] * a1;
    a0 = t0;
    a1 = t1;
}

/// Transforms pairs (i, i | target_bit) inside one buffer; rows with an
/// unsatisfied offset-segment control are left alone. Returns pairs updated.
inline std::uint64_t apply_in_block(std::span<Amplitude> buf, const GateMatrix &u,
                                    std::uint64_t target_bit, std::uint64_t ctrl_mask) {
    std::uint64_t pairs = 0;
    const std::uint64_t len = buf.size();
    for (std::uint64_t i = 0; i < len; ++i) {
        if ((i & target_bit) == 0 && (i & ctrl_mask) == ctrl_mask) {
            apply_pair(u, buf[i], buf[i | target_bit]);
            ++pairs;
        }
    }
    return pairs;
}

/// Transforms pairs (lo[j], hi[j]) across two buffers that differ in one
/// block-id or rank-id bit; `lo` is the side where that bit is 0.
inline std::uint64_t apply_cross_block(std::span<Amplitude> lo, std::span<Amplitude> hi,
                                       const GateMatrix &u, std::uint64_t ctrl_mask) {
    if (lo.size() != hi.size()) {
        throw ContractViolation("apply_cross_block: buffer length mismatch");
    }
    std::uint64_t pairs = 0;
    const std::uint64_t len = lo.size();
    for (std::uint64_t j = 0; j < len; ++j) {
        if ((j & ctrl_mask) == ctrl_mask) {
            apply_pair(u, lo[j], hi[j]);
            ++pairs;
        }
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// Per-gate execution.
// ---------------------------------------------------------------------------

struct GateStats {
    std::uint64_t blocks_processed = 0;
    std::uint64_t blocks_skipped = 0;
    std::uint64_t pair_updates = 0;
    std::uint64_t exchanges_sent = 0;
    std::uint64_t exchanges_received = 0;
    std::uint64_t exchanged_bytes = 0;
    std::uint64_t cache_lookups = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t compress_ns = 0;
    std::uint64_t decompress_ns = 0;
    std::uint64_t compute_ns = 0;
    std::uint64_t comm_ns = 0;

    GateStats &operator+=(const GateStats &o) {
        blocks_processed += o.blocks_processed;
        blocks_skipped += o.blocks_skipped;
        pair_updates += o.pair_updates;
        exchanges_sent += o.exchanges_sent;
        exchanges_received += o.exchanges_received;
        exchanged_bytes += o.exchanged_bytes;
        cache_lookups += o.cache_lookups;
        cache_hits += o.cache_hits;
        compress_ns += o.compress_ns;
        decompress_ns += o.decompress_ns;
        compute_ns += o.compute_ns;
        comm_ns += o.comm_ns;
        return *this;
    }
};

/**
 * Executes gates for one rank against its BlockStore, optionally consulting
 * a result cache. Cross-rank gates are split in two phases so a driver can
 * interleave the exchange: collect_outgoing() first on every rank, then
 * run_cross_rank() with the partner's bytes.
 */
class GateExecutor {
  public:
    GateExecutor(BlockStore &store, BlockCache *cache) : store_(store), cache_(cache) {}

    /// InBlock and CrossBlockSameRank localities, whole rank.
    GateStats run_local(const Gate &gate, const GatePlan &plan) {
        GateStats stats;
        if (!plan.rank_active(store_.rank_id())) {
            stats.blocks_skipped += store_.layout().blocks_per_rank();
            return stats;
        }
        const std::uint64_t timers_before_c = store_.compress_ns();
        const std::uint64_t timers_before_d = store_.decompress_ns();
        if (plan.locality == QubitLocality::InBlock) {
            run_in_block(gate, plan, stats);
        } else if (plan.locality == QubitLocality::CrossBlockSameRank) {
            run_cross_block(gate, plan, stats);
        } else {
            throw ContractViolation("run_local called with a cross-rank plan");
        }
        stats.compress_ns += store_.compress_ns() - timers_before_c;
        stats.decompress_ns += store_.decompress_ns() - timers_before_d;
        return stats;
    }

    /// CrossRank phase one: serialized copies of every participating block,
    /// destined for the partner rank.
    struct OutgoingBlock {
        std::uint64_t block_id = 0;
        std::vector<std::uint8_t> bytes;
    };

    std::vector<OutgoingBlock> collect_outgoing(const GatePlan &plan, GateStats &stats) {
        std::vector<OutgoingBlock> out;
        if (plan.locality != QubitLocality::CrossRank || !plan.rank_active(store_.rank_id())) {
            if (plan.locality == QubitLocality::CrossRank) {
                stats.blocks_skipped += store_.layout().blocks_per_rank();
            }
            return out;
        }
        detail::ScopedTimer timer(stats.comm_ns);
        for (std::uint64_t k = 0; k < store_.layout().blocks_per_rank(); ++k) {
            if (!plan.block_active(k)) {
                continue;
            }
            out.push_back({k, store_.block(k).serialize()});
            stats.exchanges_sent += 1;
            stats.exchanged_bytes += out.back().bytes.size();
        }
        return out;
    }

    /// CrossRank phase two. `take_incoming` yields the partner's serialized
    /// bytes for a block id; it is called exactly once per participating
    /// block, in ascending block order.
    GateStats run_cross_rank(const Gate &gate, const GatePlan &plan,
                             const std::function<std::vector<std::uint8_t>(std::uint64_t)> &take_incoming) {
        GateStats stats;
        if (!plan.rank_active(store_.rank_id())) {
            return stats;
        }
        const std::uint64_t timers_before_c = store_.compress_ns();
        const std::uint64_t timers_before_d = store_.decompress_ns();
        const bool high_side = (store_.rank_id() & plan.target_rank_bit) != 0;
        for (std::uint64_t k = 0; k < store_.layout().blocks_per_rank(); ++k) {
            if (!plan.block_active(k)) {
                stats.blocks_skipped += 1;
                continue;
            }
            std::vector<std::uint8_t> bytes;
            {
                detail::ScopedTimer timer(stats.comm_ns);
                bytes = take_incoming(k);
                stats.exchanges_received += 1;
                stats.exchanged_bytes += bytes.size();
            }
            const CompressedBlock partner = CompressedBlock::parse(bytes);

            BlockCache::Key key;
            bool use_cache = cache_ != nullptr && cache_->enabled();
            if (use_cache) {
                // Operands in global index order: the rank with target bit 0
                // owns the first operand.
                const CompressedBlock &lo_cb = high_side ? partner : store_.block(k);
                const CompressedBlock &hi_cb = high_side ? store_.block(k) : partner;
                key = BlockCache::make_key(gate, store_.bound(), store_.variant(), lo_cb, &hi_cb);
                stats.cache_lookups += 1;
                if (const BlockCache::Value *v = cache_->lookup(key)) {
                    stats.cache_hits += 1;
                    store_.install(k, high_side ? v->second : v->first);
                    stats.blocks_processed += 1;
                    continue;
                }
                use_cache = cache_->enabled();
            }

            std::span<Amplitude> mine = store_.fetch(k);
            std::span<Amplitude> theirs = store_.fetch_external(partner);
            auto lo = high_side ? theirs : mine;
            auto hi = high_side ? mine : theirs;
            {
                detail::ScopedTimer timer(stats.compute_ns);
                stats.pair_updates += apply_cross_block(lo, hi, gate.u, plan.offset_ctrl_mask);
            }
            if (use_cache) {
                CompressedBlock partner_out;
                {
                    detail::ScopedTimer timer(stats.compress_ns);
                    partner_out = compress_block(theirs, store_.bound(), store_.variant());
                }
                store_.store(k, mine);
                const CompressedBlock &mine_out = store_.block(k);
                if (high_side) {
                    cache_->insert(key, partner_out, mine_out);
                } else {
                    cache_->insert(key, mine_out, partner_out);
                }
            } else {
                store_.store(k, mine);
            }
            store_.release_external();
            stats.blocks_processed += 1;
        }
        stats.compress_ns += store_.compress_ns() - timers_before_c;
        stats.decompress_ns += store_.decompress_ns() - timers_before_d;
        return stats;
    }

  private:
    void run_in_block(const Gate &gate, const GatePlan &plan, GateStats &stats) {
        for (std::uint64_t k = 0; k < store_.layout().blocks_per_rank(); ++k) {
            if (!plan.block_active(k)) {
                stats.blocks_skipped += 1;
                continue;
            }
            BlockCache::Key key;
            const bool use_cache = cache_ != nullptr && cache_->enabled();
            if (use_cache) {
                key = BlockCache::make_key(gate, store_.bound(), store_.variant(), store_.block(k), nullptr);
                stats.cache_lookups += 1;
                if (const BlockCache::Value *v = cache_->lookup(key)) {
                    stats.cache_hits += 1;
                    store_.install(k, v->first);
                    stats.blocks_processed += 1;
                    continue;
                }
            }
            std::span<Amplitude> buf = store_.fetch(k);
            {
                detail::ScopedTimer timer(stats.compute_ns);
                stats.pair_updates +=
                    apply_in_block(buf, gate.u, plan.target_offset_bit, plan.offset_ctrl_mask);
            }
            store_.store(k, buf);
            if (use_cache && cache_->enabled()) {
                cache_->insert(key, store_.block(k), CompressedBlock{});
            }
            stats.blocks_processed += 1;
        }
    }

    void run_cross_block(const Gate &gate, const GatePlan &plan, GateStats &stats) {
        for (std::uint64_t x = 0; x < store_.layout().blocks_per_rank(); ++x) {
            if ((x & plan.target_block_bit) != 0) {
                continue; // enumerate pairs from their low member
            }
            const std::uint64_t y = x | plan.target_block_bit;
            if (!plan.block_active(x)) {
                // Controls never sit on the target bit, so x and y agree.
                stats.blocks_skipped += 2;
                continue;
            }
            BlockCache::Key key;
            const bool use_cache = cache_ != nullptr && cache_->enabled();
            if (use_cache) {
                key = BlockCache::make_key(gate, store_.bound(), store_.variant(), store_.block(x),
                                           &store_.block(y));
                stats.cache_lookups += 1;
                if (const BlockCache::Value *v = cache_->lookup(key)) {
                    stats.cache_hits += 1;
                    store_.install(x, v->first);
                    store_.install(y, v->second);
                    stats.blocks_processed += 2;
                    continue;
                }
            }
            std::span<Amplitude> lo = store_.fetch(x);
            std::span<Amplitude> hi = store_.fetch(y);
            {
                detail::ScopedTimer timer(stats.compute_ns);
                stats.pair_updates += apply_cross_block(lo, hi, gate.u, plan.offset_ctrl_mask);
            }
            store_.store(x, lo);
            store_.store(y, hi);
            if (use_cache && cache_->enabled()) {
                cache_->insert(key, store_.block(x), store_.block(y));
            }
            stats.blocks_processed += 2;
        }
    }

    BlockStore &store_;
    BlockCache *cache_;
};

/**
 * Sequential all-rank driver: one gate across every rank, exchanges done
 * in-process. The threaded runtime interleaves the same executor phases
 * under barriers; this driver is the reference path and the unit-test
 * harness.
 */
inline GateStats execute_gate(const Gate &gate, std::span<BlockStore *const> stores,
                              std::span<BlockCache *const> caches = {}) {
    if (stores.empty()) {
        throw ArgumentError("execute_gate: no ranks");
    }
    const RankLayout &layout = stores[0]->layout();
    const GatePlan plan = plan_gate(gate, layout);
    BlockCache *no_cache = nullptr;
    auto cache_for = [&](std::uint32_t rank) -> BlockCache * {
        return caches.empty() ? no_cache : caches[rank];
    };

    GateStats total;
    if (plan.locality != QubitLocality::CrossRank) {
        for (std::uint32_t rank = 0; rank < layout.ranks(); ++rank) {
            GateExecutor ex(*stores[rank], cache_for(rank));
            total += ex.run_local(gate, plan);
        }
        return total;
    }

    // Phase one: every active rank serializes its participating blocks.
    std::vector<std::vector<GateExecutor::OutgoingBlock>> outgoing(layout.ranks());
    for (std::uint32_t rank = 0; rank < layout.ranks(); ++rank) {
        GateExecutor ex(*stores[rank], cache_for(rank));
        outgoing[rank] = ex.collect_outgoing(plan, total);
    }
    // Phase two: each rank consumes its partner's copies in block order.
    for (std::uint32_t rank = 0; rank < layout.ranks(); ++rank) {
        GateExecutor ex(*stores[rank], cache_for(rank));
        const std::uint32_t partner = plan.partner_rank(rank);
        std::size_t cursor = 0;
        auto take = [&](std::uint64_t block_id) -> std::vector<std::uint8_t> {
            const auto &queue = outgoing[partner];
            if (cursor >= queue.size() || queue[cursor].block_id != block_id) {
                throw ExchangeError("exchange out of step: rank " + std::to_string(rank) +
                                    " expected block " + std::to_string(block_id));
            }
            return queue[cursor++].bytes;
        };
        total += ex.run_cross_rank(gate, plan, take);
    }
    return total;
}

} // namespace qcsim
