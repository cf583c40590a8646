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
 * @file layout.hpp
 * @brief Partitioning of the 2^n-amplitude state vector across ranks and
 * blocks, and the index arithmetic every gate kernel relies on.
 *
 * A global amplitude index i (n bits, qubit 0 is the least significant bit)
 * splits into three contiguous fields:
 *
 *     [ rank id | block id | offset ]
 *       high bits            low bits
 *
 * so rank R owns a contiguous slice of the state, each block is a contiguous
 * run of `block_len` amplitudes, and a qubit's position alone decides whether
 * a gate touches amplitude pairs inside one block, across two blocks of the
 * same rank, or across two ranks.
 */

#pragma once

#include <cstdint>
#include <string>

#include "qcsim/common.hpp"

namespace qcsim {

/// Where the two amplitudes of a gate's update pair live relative to the
/// block partition, decided solely by the target qubit's bit position.
enum class QubitLocality : std::uint8_t {
    InBlock,            ///< both pair members inside one block
    CrossBlockSameRank, ///< pair members in two blocks owned by one rank
    CrossRank,          ///< pair members owned by two different ranks
};

inline const char *to_string(QubitLocality loc) {
    switch (loc) {
    case QubitLocality::InBlock:
        return "InBlock";
    case QubitLocality::CrossBlockSameRank:
        return "CrossBlockSameRank";
    case QubitLocality::CrossRank:
        return "CrossRank";
    }
    return "?";
}

/// The (rank, block, offset) decomposition of one global amplitude index.
struct IndexParts {
    std::uint32_t rank = 0;
    std::uint64_t block = 0;
    std::uint64_t offset = 0;
    friend bool operator==(const IndexParts &, const IndexParts &) = default;
};

/**
 * Immutable description of how 2^n amplitudes are split over `ranks` ranks
 * holding `blocks_per_rank` blocks of `block_len` amplitudes each.
 *
 * Invariant: ranks * blocks_per_rank * block_len == 2^qubits, and all three
 * factors are powers of two, so the three index fields are disjoint bit
 * ranges of the global index.
 */
class RankLayout {
  public:
    RankLayout(unsigned qubits, std::uint32_t ranks, std::uint64_t blocks_per_rank)
        : qubits_(qubits), ranks_(ranks), blocks_per_rank_(blocks_per_rank) {
        if (qubits_ == 0 || qubits_ > 62) {
            throw ConfigError("layout: qubit count must be in [1, 62], got " + std::to_string(qubits_));
        }
        if (!is_power_of_two(ranks_)) {
            throw ConfigError("layout: rank count must be a power of two, got " + std::to_string(ranks_));
        }
        if (!is_power_of_two(blocks_per_rank_)) {
            throw ConfigError("layout: blocks per rank must be a power of two, got " +
                              std::to_string(blocks_per_rank_));
        }
        rank_bits_ = log2_exact(ranks_);
        block_bits_ = log2_exact(blocks_per_rank_);
        if (rank_bits_ + block_bits_ > qubits_) {
            throw ConfigError("layout: " + std::to_string(ranks_) + " ranks x " +
                              std::to_string(blocks_per_rank_) + " blocks need more index bits than " +
                              std::to_string(qubits_) + " qubits provide");
        }
        offset_bits_ = qubits_ - rank_bits_ - block_bits_;
        block_len_ = std::uint64_t{1} << offset_bits_;
    }

    unsigned qubits() const noexcept { return qubits_; }
    std::uint32_t ranks() const noexcept { return ranks_; }
    std::uint64_t blocks_per_rank() const noexcept { return blocks_per_rank_; }
    std::uint64_t block_len() const noexcept { return block_len_; }

    unsigned rank_bits() const noexcept { return rank_bits_; }
    unsigned block_bits() const noexcept { return block_bits_; }
    unsigned offset_bits() const noexcept { return offset_bits_; }

    std::uint64_t total_amplitudes() const noexcept { return std::uint64_t{1} << qubits_; }
    std::uint64_t raw_state_bytes() const noexcept { return total_amplitudes() * kBytesPerAmplitude; }
    std::uint64_t block_bytes() const noexcept { return block_len_ * kBytesPerAmplitude; }

    /// Scratch bytes each rank needs for in-flight decompressed blocks: two
    /// working buffers of one block each.
    std::uint64_t scratch_bytes_per_rank() const noexcept { return 2 * block_bytes(); }

    friend bool operator==(const RankLayout &a, const RankLayout &b) {
        return a.qubits_ == b.qubits_ && a.ranks_ == b.ranks_ && a.blocks_per_rank_ == b.blocks_per_rank_;
    }

    std::string describe() const {
        return std::to_string(qubits_) + " qubits, " + std::to_string(ranks_) + " ranks x " +
               std::to_string(blocks_per_rank_) + " blocks x " + std::to_string(block_len_) + " amplitudes";
    }

  private:
    unsigned qubits_;
    std::uint32_t ranks_;
    std::uint64_t blocks_per_rank_;
    std::uint64_t block_len_ = 0;
    unsigned rank_bits_ = 0;
    unsigned block_bits_ = 0;
    unsigned offset_bits_ = 0;
};

/// Segment of the global index the qubit's bit falls in. A qubit in the
/// offset field pairs amplitudes inside one block; in the block-id field it
/// pairs two blocks of the same rank; in the rank-id field it pairs slices
/// owned by two ranks.
inline QubitLocality classify_qubit(unsigned q, const RankLayout &layout) {
    if (q >= layout.qubits()) {
        throw ArgumentError("classify_qubit: qubit " + std::to_string(q) + " out of range for " +
                            std::to_string(layout.qubits()) + " qubits");
    }
    if (q < layout.offset_bits()) {
        return QubitLocality::InBlock;
    }
    if (q < layout.offset_bits() + layout.block_bits()) {
        return QubitLocality::CrossBlockSameRank;
    }
    return QubitLocality::CrossRank;
}

/// Index of the amplitude paired with i under a gate on qubit q: the global
/// index with bit q flipped. Involution by construction.
inline std::uint64_t partner_index(std::uint64_t i, unsigned q, const RankLayout &layout) {
    if (q >= layout.qubits()) {
        throw ArgumentError("partner_index: qubit " + std::to_string(q) + " out of range");
    }
    if (i >= layout.total_amplitudes()) {
        throw ArgumentError("partner_index: amplitude index out of range");
    }
    return i ^ (std::uint64_t{1} << q);
}

inline IndexParts decompose_index(std::uint64_t i, const RankLayout &layout) {
    if (i >= layout.total_amplitudes()) {
        throw ArgumentError("decompose_index: amplitude index out of range");
    }
    IndexParts parts;
    parts.offset = i & (layout.block_len() - 1);
    parts.block = (i >> layout.offset_bits()) & (layout.blocks_per_rank() - 1);
    parts.rank = static_cast<std::uint32_t>(i >> (layout.offset_bits() + layout.block_bits()));
    return parts;
}

inline std::uint64_t recompose_index(const IndexParts &parts, const RankLayout &layout) {
    if (parts.rank >= layout.ranks() || parts.block >= layout.blocks_per_rank() ||
        parts.offset >= layout.block_len()) {
        throw ArgumentError("recompose_index: parts out of range for layout");
    }
    return (static_cast<std::uint64_t>(parts.rank) << (layout.offset_bits() + layout.block_bits())) |
           (parts.block << layout.offset_bits()) | parts.offset;
}

} // namespace qcsim
