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

#include "qcsim/layout.hpp"

#include <cstdint>

#include "gtest/gtest.h"

namespace {

using qcsim::ArgumentError;
using qcsim::ConfigError;
using qcsim::IndexParts;
using qcsim::QubitLocality;
using qcsim::RankLayout;

// Oracle: decompose a global index with plain division arithmetic instead of
// the shift/mask path under test.
IndexParts decompose_by_arithmetic(std::uint64_t i, const RankLayout &layout) {
    IndexParts parts;
    parts.offset = i % layout.block_len();
    parts.block = (i / layout.block_len()) % layout.blocks_per_rank();
    parts.rank = static_cast<std::uint32_t>(i / (layout.block_len() * layout.blocks_per_rank()));
    return parts;
}

// Oracle: a qubit's locality observed from where flipped indices actually
// land, checked across every amplitude index.
QubitLocality locality_by_enumeration(unsigned q, const RankLayout &layout) {
    QubitLocality observed = QubitLocality::InBlock;
    bool first = true;
    for (std::uint64_t i = 0; i < layout.total_amplitudes(); ++i) {
        const std::uint64_t p = i ^ (std::uint64_t{1} << q);
        const IndexParts a = decompose_by_arithmetic(i, layout);
        const IndexParts b = decompose_by_arithmetic(p, layout);
        QubitLocality here;
        if (a.rank != b.rank) {
            here = QubitLocality::CrossRank;
        } else if (a.block != b.block) {
            here = QubitLocality::CrossBlockSameRank;
        } else {
            here = QubitLocality::InBlock;
        }
        if (first) {
            observed = here;
            first = false;
        } else {
            EXPECT_EQ(observed, here) << "qubit " << q << " index " << i;
        }
    }
    return observed;
}

TEST(RankLayout, DerivesFieldWidthsFromFactors) {
    const RankLayout layout(5, 2, 2);
    EXPECT_EQ(layout.block_len(), 8u);
    EXPECT_EQ(layout.offset_bits(), 3u);
    EXPECT_EQ(layout.block_bits(), 1u);
    EXPECT_EQ(layout.rank_bits(), 1u);
    EXPECT_EQ(layout.total_amplitudes(), 32u);
    EXPECT_EQ(layout.ranks() * layout.blocks_per_rank() * layout.block_len(), layout.total_amplitudes());
    EXPECT_EQ(layout.raw_state_bytes(), 32u * 16u);
    EXPECT_EQ(layout.scratch_bytes_per_rank(), 2u * 8u * 16u);
}

TEST(RankLayout, RejectsImpossibleShapes) {
    EXPECT_THROW(RankLayout(0, 1, 1), ConfigError);
    EXPECT_THROW(RankLayout(63, 1, 1), ConfigError);
    EXPECT_THROW(RankLayout(8, 3, 1), ConfigError);  // ranks not a power of two
    EXPECT_THROW(RankLayout(8, 2, 6), ConfigError);  // blocks not a power of two
    EXPECT_THROW(RankLayout(4, 8, 8), ConfigError);  // needs 6 index bits, has 4
    EXPECT_NO_THROW(RankLayout(4, 4, 4));            // exactly fits, one amp per block
}

TEST(ClassifyQubit, MatchesEnumerationOnSmallLayout) {
    const RankLayout layout(5, 2, 2);
    EXPECT_EQ(qcsim::classify_qubit(0, layout), QubitLocality::InBlock);
    EXPECT_EQ(qcsim::classify_qubit(1, layout), QubitLocality::InBlock);
    EXPECT_EQ(qcsim::classify_qubit(2, layout), QubitLocality::InBlock);
    EXPECT_EQ(qcsim::classify_qubit(3, layout), QubitLocality::CrossBlockSameRank);
    EXPECT_EQ(qcsim::classify_qubit(4, layout), QubitLocality::CrossRank);
    for (unsigned q = 0; q < layout.qubits(); ++q) {
        EXPECT_EQ(qcsim::classify_qubit(q, layout), locality_by_enumeration(q, layout)) << "qubit " << q;
    }
}

TEST(ClassifyQubit, MatchesEnumerationAcrossShapes) {
    // Shapes chosen to exercise empty segments: single rank, single block
    // per rank, and single-amplitude blocks.
    const RankLayout shapes[] = {
        RankLayout(8, 1, 1),  RankLayout(8, 1, 16), RankLayout(8, 4, 1),
        RankLayout(8, 4, 16), RankLayout(10, 8, 4), RankLayout(6, 2, 32),
    };
    for (const RankLayout &layout : shapes) {
        for (unsigned q = 0; q < layout.qubits(); ++q) {
            EXPECT_EQ(qcsim::classify_qubit(q, layout), locality_by_enumeration(q, layout))
                << layout.describe() << " qubit " << q;
        }
    }
}

TEST(ClassifyQubit, RejectsOutOfRangeQubit) {
    const RankLayout layout(5, 2, 2);
    EXPECT_THROW(qcsim::classify_qubit(5, layout), ArgumentError);
    EXPECT_THROW(qcsim::classify_qubit(99, layout), ArgumentError);
}

TEST(PartnerIndex, IsAnInvolutionThatFlipsExactlyOneBit) {
    const RankLayout layout(10, 2, 4);
    for (unsigned q = 0; q < layout.qubits(); ++q) {
        for (std::uint64_t i = 0; i < layout.total_amplitudes(); ++i) {
            const std::uint64_t p = qcsim::partner_index(i, q, layout);
            EXPECT_EQ(p, i ^ (std::uint64_t{1} << q));
            EXPECT_EQ(qcsim::partner_index(p, q, layout), i);
            EXPECT_NE(p, i);
        }
    }
}

TEST(PartnerIndex, RejectsOutOfRangeArguments) {
    const RankLayout layout(5, 2, 2);
    EXPECT_THROW(qcsim::partner_index(0, 5, layout), ArgumentError);
    EXPECT_THROW(qcsim::partner_index(32, 0, layout), ArgumentError);
}

TEST(DecomposeIndex, MatchesArithmeticOracleExhaustively) {
    const RankLayout layout(12, 4, 8);
    ASSERT_EQ(layout.block_len(), 128u);
    for (std::uint64_t i = 0; i < layout.total_amplitudes(); ++i) {
        const IndexParts got = qcsim::decompose_index(i, layout);
        EXPECT_EQ(got, decompose_by_arithmetic(i, layout)) << "index " << i;
        EXPECT_EQ(qcsim::recompose_index(got, layout), i);
    }
}

TEST(DecomposeIndex, KnownPoint) {
    const RankLayout layout(12, 4, 8);
    // rank 2, block 5, offset 77 -> 2*1024 + 5*128 + 77.
    const IndexParts parts = qcsim::decompose_index(2765, layout);
    EXPECT_EQ(parts.rank, 2u);
    EXPECT_EQ(parts.block, 5u);
    EXPECT_EQ(parts.offset, 77u);
}

TEST(DecomposeIndex, RejectsOutOfRange) {
    const RankLayout layout(5, 2, 2);
    EXPECT_THROW(qcsim::decompose_index(32, layout), ArgumentError);
    EXPECT_THROW(qcsim::recompose_index(IndexParts{2, 0, 0}, layout), ArgumentError);
    EXPECT_THROW(qcsim::recompose_index(IndexParts{0, 2, 0}, layout), ArgumentError);
    EXPECT_THROW(qcsim::recompose_index(IndexParts{0, 0, 8}, layout), ArgumentError);
}

TEST(QubitLocality, SegmentsPartitionTheQubitRange) {
    // Every qubit falls in exactly one segment and segment sizes match the
    // field widths.
    const RankLayout layout(11, 4, 8);
    unsigned in_block = 0;
    unsigned cross_block = 0;
    unsigned cross_rank = 0;
    for (unsigned q = 0; q < layout.qubits(); ++q) {
        switch (qcsim::classify_qubit(q, layout)) {
        case QubitLocality::InBlock:
            ++in_block;
            break;
        case QubitLocality::CrossBlockSameRank:
            ++cross_block;
            break;
        case QubitLocality::CrossRank:
            ++cross_rank;
            break;
        }
    }
    EXPECT_EQ(in_block, layout.offset_bits());
    EXPECT_EQ(cross_block, layout.block_bits());
    EXPECT_EQ(cross_rank, layout.rank_bits());
}

} // namespace
