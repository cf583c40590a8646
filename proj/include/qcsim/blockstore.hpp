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
 * @file blockstore.hpp
 * @brief Per-rank ownership of compressed amplitude blocks.
 *
 * A rank's slice of the state lives compressed at all times except for at
 * most two blocks pinned in scratch buffers while a gate transforms them.
 * The two-slot discipline is the memory model: accounted bytes are the sum
 * of all compressed block sizes plus the two scratch buffers, nothing else.
 *
 * The result cache remembers the compressed outputs of recent gate
 * applications keyed by (gate action, operand payload fingerprints). States
 * with many identical blocks hit it constantly; unstructured states never
 * hit, so the cache retires itself after a fruitless probation.
 */

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qcsim/codec.hpp"
#include "qcsim/common.hpp"
#include "qcsim/gates.hpp"
#include "qcsim/layout.hpp"

namespace qcsim {

namespace detail {

class ScopedTimer {
  public:
    explicit ScopedTimer(std::uint64_t &sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~ScopedTimer() {
        sink_ += static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_)
                .count());
    }

  private:
    std::uint64_t &sink_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail

/**
 * The compressed blocks of one rank plus two scratch buffers.
 *
 * Scratch discipline: fetch() pins a block into a free slot and returns the
 * decompressed amplitudes; the caller mutates them in place and either
 * store()s them back (recompressing at the current bound) or release()s
 * them untouched. A third concurrent pin is a caller bug.
 */
class BlockStore {
  public:
    /// Observes every store: the amplitudes just compressed and the block
    /// that now holds them. Test instrumentation; unset in production runs.
    using StoreHook =
        std::function<void(std::uint32_t rank, std::uint64_t block, std::span<const Amplitude> values,
                           const CompressedBlock &stored)>;

    BlockStore(const RankLayout &layout, std::uint32_t rank_id, CodecVariant variant, ErrorBound bound)
        : layout_(layout), rank_id_(rank_id), variant_(variant), bound_(bound) {
        if (rank_id_ >= layout_.ranks()) {
            throw ConfigError("block store: rank id " + std::to_string(rank_id_) + " out of range");
        }
        for (Slot &slot : slots_) {
            slot.buf.resize(layout_.block_len());
        }
        // All blocks of the fresh state are identical zero blocks except the
        // one holding amplitude 0, so compress the zero image once.
        std::vector<Amplitude> zeros(layout_.block_len(), Amplitude{0.0, 0.0});
        CompressedBlock zero_cb;
        {
            detail::ScopedTimer timer(compress_ns_);
            zero_cb = compress_block(zeros, bound_, variant_);
        }
        blocks_.assign(layout_.blocks_per_rank(), zero_cb);
        if (rank_id_ == 0) {
            zeros[0] = Amplitude{1.0, 0.0};
            detail::ScopedTimer timer(compress_ns_);
            blocks_[0] = compress_block(zeros, bound_, variant_);
        }
        for (const CompressedBlock &cb : blocks_) {
            compressed_bytes_ += cb.serialized_size();
        }
        note_accounting();
    }

    BlockStore(const BlockStore &) = delete;
    BlockStore &operator=(const BlockStore &) = delete;

    const RankLayout &layout() const noexcept { return layout_; }
    std::uint32_t rank_id() const noexcept { return rank_id_; }
    CodecVariant variant() const noexcept { return variant_; }

    const ErrorBound &bound() const noexcept { return bound_; }

    /// Sets the bound used by subsequent stores. Already-stored blocks keep
    /// their bytes until their next store touches them.
    void set_bound(const ErrorBound &bound) { bound_ = bound; }

    /// Pins `block_id` into a free scratch slot and returns its amplitudes.
    std::span<Amplitude> fetch(std::uint64_t block_id) {
        Slot &slot = claim_slot(block_id, SlotState::PinnedBlock);
        ++fetches_;
        {
            detail::ScopedTimer timer(decompress_ns_);
            slot.buf = decompress_block(blocks_.at(block_id));
        }
        return {slot.buf.data(), slot.buf.size()};
    }

    /// Pins a foreign compressed block (a partner rank's) into a slot.
    std::span<Amplitude> fetch_external(const CompressedBlock &cb) {
        if (cb.element_count != layout_.block_len()) {
            throw ContractViolation("external block has " + std::to_string(cb.element_count) +
                                    " amplitudes, expected " + std::to_string(layout_.block_len()));
        }
        Slot &slot = claim_slot(0, SlotState::PinnedExternal);
        ++fetches_;
        {
            detail::ScopedTimer timer(decompress_ns_);
            slot.buf = decompress_block(cb);
        }
        return {slot.buf.data(), slot.buf.size()};
    }

    /// Compresses the pinned amplitudes of `block_id` at the current bound
    /// and frees the slot. `values` must be the span fetch() handed out.
    void store(std::uint64_t block_id, std::span<const Amplitude> values) {
        Slot &slot = find_pinned(block_id);
        if (values.data() != slot.buf.data() || values.size() != slot.buf.size()) {
            throw ContractViolation("store: span is not the scratch buffer fetch() returned");
        }
        CompressedBlock cb;
        {
            detail::ScopedTimer timer(compress_ns_);
            cb = compress_block(values, bound_, variant_);
        }
        ++stores_;
        replace_block(block_id, std::move(cb));
        // Free before the hook: the buffer bytes stay valid until the next
        // claim, and a throwing hook must not leak the pin.
        free_slot(slot);
        if (on_store) {
            on_store(rank_id_, block_id, values, blocks_[block_id]);
        }
    }

    /// Unpins `block_id` without writing anything back.
    void release(std::uint64_t block_id) { free_slot(find_pinned(block_id)); }

    /// Failure recovery: unpins every scratch slot without writing back, so
    /// blocks keep their last committed bytes. Only sensible after an
    /// exception abandoned a gate mid-flight.
    void abandon_scratch() noexcept {
        for (Slot &slot : slots_) {
            if (slot.state != SlotState::Free) {
                free_slot(slot);
            }
        }
    }

    /// Unpins the foreign block fetched with fetch_external().
    void release_external() {
        for (Slot &slot : slots_) {
            if (slot.state == SlotState::PinnedExternal) {
                free_slot(slot);
                return;
            }
        }
        throw ContractViolation("release_external: no external block is pinned");
    }

    /// Replaces a block's compressed bytes directly (cache hits, resume,
    /// incoming exchanges). The block must not be pinned.
    void install(std::uint64_t block_id, CompressedBlock cb) {
        if (block_id >= blocks_.size()) {
            throw ContractViolation("install: block id out of range");
        }
        for (const Slot &slot : slots_) {
            if (slot.state == SlotState::PinnedBlock && slot.block_id == block_id) {
                throw ContractViolation("install: block " + std::to_string(block_id) + " is pinned");
            }
        }
        if (cb.element_count != layout_.block_len()) {
            throw ContractViolation("install: block has wrong element count");
        }
        replace_block(block_id, std::move(cb));
    }

    const CompressedBlock &block(std::uint64_t block_id) const { return blocks_.at(block_id); }

    // -- accounting ---------------------------------------------------------

    /// Live bytes this rank is charged for: every compressed block plus the
    /// two scratch buffers.
    std::uint64_t accounted_bytes() const noexcept {
        return compressed_bytes_ + layout_.scratch_bytes_per_rank();
    }

    std::uint64_t compressed_bytes() const noexcept { return compressed_bytes_; }

    /// Audit: recomputes the compressed total from the blocks themselves.
    std::uint64_t recompute_compressed_bytes() const {
        std::uint64_t sum = 0;
        for (const CompressedBlock &cb : blocks_) {
            sum += cb.serialized_size();
        }
        return sum;
    }

    std::uint64_t peak_accounted_bytes() const noexcept { return peak_accounted_; }
    std::uint64_t max_compressed_bytes() const noexcept { return max_compressed_; }

    unsigned scratch_watermark() const noexcept { return scratch_watermark_; }
    unsigned pinned_slots() const noexcept { return pinned_; }

    std::uint64_t fetches() const noexcept { return fetches_; }
    std::uint64_t stores() const noexcept { return stores_; }
    std::uint64_t compress_ns() const noexcept { return compress_ns_; }
    std::uint64_t decompress_ns() const noexcept { return decompress_ns_; }

    StoreHook on_store;

  private:
    enum class SlotState : std::uint8_t { Free, PinnedBlock, PinnedExternal };

    struct Slot {
        SlotState state = SlotState::Free;
        std::uint64_t block_id = 0;
        std::vector<Amplitude> buf;
    };

    Slot &claim_slot(std::uint64_t block_id, SlotState state) {
        if (state == SlotState::PinnedBlock) {
            if (block_id >= blocks_.size()) {
                throw ContractViolation("fetch: block id out of range");
            }
            for (const Slot &slot : slots_) {
                if (slot.state == SlotState::PinnedBlock && slot.block_id == block_id) {
                    throw ContractViolation("fetch: block " + std::to_string(block_id) +
                                            " is already pinned");
                }
            }
        }
        for (Slot &slot : slots_) {
            if (slot.state == SlotState::Free) {
                slot.state = state;
                slot.block_id = block_id;
                ++pinned_;
                scratch_watermark_ = std::max(scratch_watermark_, pinned_);
                return slot;
            }
        }
        throw ContractViolation("both scratch slots are pinned; store or release a block first");
    }

    Slot &find_pinned(std::uint64_t block_id) {
        for (Slot &slot : slots_) {
            if (slot.state == SlotState::PinnedBlock && slot.block_id == block_id) {
                return slot;
            }
        }
        throw ContractViolation("block " + std::to_string(block_id) + " is not pinned");
    }

    void free_slot(Slot &slot) {
        slot.state = SlotState::Free;
        --pinned_;
    }

    void replace_block(std::uint64_t block_id, CompressedBlock cb) {
        compressed_bytes_ -= blocks_[block_id].serialized_size();
        blocks_[block_id] = std::move(cb);
        compressed_bytes_ += blocks_[block_id].serialized_size();
        note_accounting();
    }

    void note_accounting() {
        peak_accounted_ = std::max(peak_accounted_, accounted_bytes());
        max_compressed_ = std::max(max_compressed_, compressed_bytes_);
    }

    RankLayout layout_;
    std::uint32_t rank_id_;
    CodecVariant variant_;
    ErrorBound bound_;
    std::vector<CompressedBlock> blocks_;
    std::array<Slot, 2> slots_;
    unsigned pinned_ = 0;
    unsigned scratch_watermark_ = 0;
    std::uint64_t compressed_bytes_ = 0;
    std::uint64_t peak_accounted_ = 0;
    std::uint64_t max_compressed_ = 0;
    std::uint64_t fetches_ = 0;
    std::uint64_t stores_ = 0;
    std::uint64_t compress_ns_ = 0;
    std::uint64_t decompress_ns_ = 0;
};

/**
 * Fixed-capacity LRU cache of gate results in compressed form.
 *
 * Key: a fingerprint of the gate's action (matrix, target, controls, bound,
 * codec) plus payload hashes and exact sizes of the operand blocks. Value:
 * the compressed output block(s). A hit must be byte-equivalent to redoing
 * the work, which holds because compression is a pure function and the
 * bound is part of the key.
 *
 * After `kDisableProbation` consecutive lookups without a hit the cache
 * concludes the state has no repeated-block structure left and disables
 * itself for the rest of the run, dropping its lines. A hit restarts the
 * streak, so early repetition (a fresh state is mostly zero blocks) does not
 * keep a useless cache alive through a long scrambled phase.
 */
class BlockCache {
  public:
    static constexpr std::size_t kLineCount = 64;
    static constexpr std::uint64_t kDisableProbation = 256;

    struct Key {
        std::uint64_t op = 0;
        Hash128 h1, h2;
        std::uint64_t size1 = 0, size2 = 0;
        friend bool operator==(const Key &, const Key &) = default;
    };

    /// Value: compressed outputs for the first and (for pair operations)
    /// second operand block, in operand order.
    using Value = std::pair<CompressedBlock, CompressedBlock>;

    static Key make_key(const Gate &gate, const ErrorBound &bound, CodecVariant variant,
                        const CompressedBlock &cb1, const CompressedBlock *cb2) {
        std::vector<std::uint8_t> op_bytes = gate.descriptor_bytes();
        put_u8(op_bytes, static_cast<std::uint8_t>(bound.mode));
        put_f64_be(op_bytes, bound.value);
        put_u8(op_bytes, static_cast<std::uint8_t>(variant));
        put_u8(op_bytes, cb2 == nullptr ? 0 : 1);
        Key key;
        key.op = fnv1a_64(op_bytes);
        key.h1 = fnv1a_128(cb1.payload);
        key.size1 = cb1.payload_length();
        if (cb2 != nullptr) {
            key.h2 = fnv1a_128(cb2->payload);
            key.size2 = cb2->payload_length();
        }
        return key;
    }

    bool enabled() const noexcept { return enabled_; }
    std::uint64_t lookups() const noexcept { return lookups_; }
    std::uint64_t hits() const noexcept { return hits_; }
    std::size_t lines_in_use() const noexcept { return lines_.size(); }

    /// Misses since the last hit. Frozen at kDisableProbation once the
    /// cache has disabled itself.
    std::uint64_t fruitless_streak() const noexcept { return fruitless_; }

    /// Returns the cached outputs or null. Counts the lookup; the
    /// kDisableProbation-th consecutive miss disables the cache.
    const Value *lookup(const Key &key) {
        if (!enabled_) {
            return nullptr;
        }
        ++lookups_;
        for (Line &line : lines_) {
            if (line.key == key) {
                ++hits_;
                fruitless_ = 0;
                line.last_use = ++clock_;
                return &line.value;
            }
        }
        if (++fruitless_ >= kDisableProbation) {
            enabled_ = false;
            lines_.clear();
            lines_.shrink_to_fit();
        }
        return nullptr;
    }

    void insert(const Key &key, CompressedBlock out1, CompressedBlock out2) {
        if (!enabled_) {
            return;
        }
        for (Line &line : lines_) {
            if (line.key == key) {
                line.value = {std::move(out1), std::move(out2)};
                line.last_use = ++clock_;
                return;
            }
        }
        if (lines_.size() < kLineCount) {
            lines_.push_back({key, {std::move(out1), std::move(out2)}, ++clock_});
            return;
        }
        Line *victim = &lines_[0];
        for (Line &line : lines_) {
            if (line.last_use < victim->last_use) {
                victim = &line;
            }
        }
        *victim = {key, {std::move(out1), std::move(out2)}, ++clock_};
    }

  private:
    struct Line {
        Key key;
        Value value;
        std::uint64_t last_use = 0;
    };

    std::vector<Line> lines_;
    std::uint64_t clock_ = 0;
    std::uint64_t lookups_ = 0;
    std::uint64_t hits_ = 0;
    std::uint64_t fruitless_ = 0;
    bool enabled_ = true;
};

} // namespace qcsim
