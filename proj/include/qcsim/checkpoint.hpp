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
 * @file checkpoint.hpp
 * @brief On-disk snapshots of a paused simulation.
 *
 * A checkpoint freezes everything needed to continue a run and reproduce
 * the uninterrupted result bit for bit: the layout shape, the next gate
 * index, the accuracy ladder position and its escalation history, the
 * per-gate error ledger, and every compressed block in rank-major order.
 * Blocks stay in their serialized form, so a snapshot is roughly the size
 * of the compressed state.
 *
 * All multi-byte integers are big-endian. Writes go to a temporary file
 * that is renamed into place, so a crash mid-save never clobbers the
 * previous snapshot.
 */

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "qcsim/circuits.hpp"
#include "qcsim/codec.hpp"
#include "qcsim/common.hpp"
#include "qcsim/layout.hpp"

namespace qcsim {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'Q', 'C', 'K', 'P'};

/// Identifies the circuit a snapshot belongs to. Derived from the rendered
/// gate list and the qubit count, so any edit to either breaks the match.
inline std::uint64_t circuit_fingerprint(const Circuit &circuit) {
    const std::string text = render(circuit);
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    put_u32_be(bytes, circuit.qubits);
    return fnv1a_64(bytes);
}

/// In-memory image of a snapshot. `blocks[rank][block]` holds every block
/// of the partitioned state.
struct CheckpointData {
    unsigned qubits = 0;
    std::uint32_t ranks = 0;
    std::uint64_t blocks_per_rank = 0;
    std::uint64_t next_gate = 0;
    std::uint32_t ladder_index = 0;
    bool ladder_forced = false;
    std::vector<std::pair<std::uint64_t, std::uint32_t>> escalations; // (gate, level)
    std::vector<double> gate_deltas;
    CodecVariant codec = CodecVariant::SolutionC;
    std::uint64_t fingerprint = 0;
    std::vector<std::vector<CompressedBlock>> blocks;
};

namespace detail {

inline void append_bytes(std::vector<std::uint8_t> &out, const std::vector<std::uint8_t> &in) {
    out.insert(out.end(), in.begin(), in.end());
}

} // namespace detail

/// Serializes a snapshot to bytes. Layout: magic, version, shape, cursor,
/// ladder state, escalation log, ledger, codec id, circuit fingerprint, a
/// per-block length directory, then the serialized blocks.
inline std::vector<std::uint8_t> serialize_checkpoint(const CheckpointData &data) {
    if (data.blocks.size() != data.ranks) {
        throw ContractViolation("checkpoint: rank count does not match block table");
    }
    std::vector<std::vector<std::uint8_t>> encoded;
    encoded.reserve(data.ranks * data.blocks_per_rank);
    for (const auto &rank_blocks : data.blocks) {
        if (rank_blocks.size() != data.blocks_per_rank) {
            throw ContractViolation("checkpoint: block count does not match layout");
        }
        for (const CompressedBlock &cb : rank_blocks) {
            encoded.push_back(cb.serialize());
        }
    }

    std::vector<std::uint8_t> out;
    out.insert(out.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_u32_be(out, kCheckpointVersion);
    put_u32_be(out, data.qubits);
    put_u32_be(out, data.ranks);
    put_u64_be(out, data.blocks_per_rank);
    put_u64_be(out, data.next_gate);
    put_u32_be(out, data.ladder_index);
    put_u8(out, data.ladder_forced ? 1 : 0);
    put_u8(out, static_cast<std::uint8_t>(data.codec));
    put_u64_be(out, data.fingerprint);
    put_u64_be(out, data.escalations.size());
    for (const auto &[gate, level] : data.escalations) {
        put_u64_be(out, gate);
        put_u32_be(out, level);
    }
    put_u64_be(out, data.gate_deltas.size());
    for (double delta : data.gate_deltas) {
        put_f64_be(out, delta);
    }
    for (const auto &bytes : encoded) {
        put_u64_be(out, bytes.size());
    }
    for (const auto &bytes : encoded) {
        detail::append_bytes(out, bytes);
    }
    return out;
}

/// Parses a snapshot. Throws FormatError for foreign bytes, VersionError
/// for an unknown version, CorruptionError for damage (a failing block
/// names its rank and block index).
inline CheckpointData parse_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader reader(bytes);
    const auto magic = reader.take(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kCheckpointMagic))) {
        throw FormatError("not a checkpoint file");
    }
    const std::uint32_t version = reader.u32_be();
    if (version != kCheckpointVersion) {
        throw VersionError("unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointData data;
    data.qubits = reader.u32_be();
    data.ranks = reader.u32_be();
    data.blocks_per_rank = reader.u64_be();
    data.next_gate = reader.u64_be();
    data.ladder_index = reader.u32_be();
    data.ladder_forced = reader.u8() != 0;
    const std::uint8_t codec_id = reader.u8();
    if (codec_id > static_cast<std::uint8_t>(CodecVariant::SolutionD)) {
        throw CorruptionError("checkpoint: unknown codec id " + std::to_string(codec_id));
    }
    data.codec = static_cast<CodecVariant>(codec_id);
    data.fingerprint = reader.u64_be();

    // Shape sanity before any size-driven allocation.
    if (data.qubits == 0 || data.qubits > 62 || data.ranks == 0 ||
        !is_power_of_two(data.ranks) || data.blocks_per_rank == 0 ||
        !is_power_of_two(data.blocks_per_rank)) {
        throw CorruptionError("checkpoint: implausible layout shape");
    }
    const std::uint64_t total_blocks = static_cast<std::uint64_t>(data.ranks) * data.blocks_per_rank;
    if (total_blocks > (std::uint64_t{1} << 30)) {
        throw CorruptionError("checkpoint: implausible block count");
    }

    const std::uint64_t escalation_count = reader.u64_be();
    if (escalation_count > (std::uint64_t{1} << 24)) {
        throw CorruptionError("checkpoint: implausible escalation count");
    }
    for (std::uint64_t i = 0; i < escalation_count; ++i) {
        const std::uint64_t gate = reader.u64_be();
        const std::uint32_t level = reader.u32_be();
        data.escalations.emplace_back(gate, level);
    }
    const std::uint64_t delta_count = reader.u64_be();
    if (delta_count > (std::uint64_t{1} << 32)) {
        throw CorruptionError("checkpoint: implausible ledger length");
    }
    data.gate_deltas.reserve(delta_count);
    for (std::uint64_t i = 0; i < delta_count; ++i) {
        data.gate_deltas.push_back(reader.f64_be());
    }

    std::vector<std::uint64_t> lengths(total_blocks);
    for (auto &len : lengths) {
        len = reader.u64_be();
        if (len > bytes.size()) {
            throw CorruptionError("checkpoint: implausible block length");
        }
    }
    data.blocks.resize(data.ranks);
    std::uint64_t cursor = 0;
    for (std::uint32_t rank = 0; rank < data.ranks; ++rank) {
        data.blocks[rank].reserve(data.blocks_per_rank);
        for (std::uint64_t block = 0; block < data.blocks_per_rank; ++block, ++cursor) {
            const auto blob = reader.take(lengths[cursor]);
            try {
                data.blocks[rank].push_back(CompressedBlock::parse(blob));
            } catch (const Error &e) {
                throw CorruptionError("checkpoint: rank " + std::to_string(rank) + " block " +
                                      std::to_string(block) + ": " + e.what());
            }
        }
    }
    if (reader.remaining() != 0) {
        throw CorruptionError("checkpoint: trailing bytes after last block");
    }
    return data;
}

/// Atomic save: write `path`.tmp, flush, rename over `path`.
inline void save_checkpoint_file(const std::string &path, const CheckpointData &data) {
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(data);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + tmp + "' for writing");
        }
        out.write(reinterpret_cast<const char *>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw IoError("failed writing '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("failed to move '" + tmp + "' into place");
    }
}

inline CheckpointData load_checkpoint_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0) {
        in.read(reinterpret_cast<char *>(bytes.data()), size);
    }
    if (!in) {
        throw IoError("failed reading '" + path + "'");
    }
    return parse_checkpoint(bytes);
}

} // namespace qcsim
