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
 * @file common.hpp
 * @brief Shared primitives: amplitude type, error hierarchy, big-endian byte
 * packing, and the non-cryptographic hashes used for cache keys.
 */

#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcsim {

/// One state-vector entry. The full state of n qubits is 2^n of these.
using Amplitude = std::complex<double>;

/// Bytes of raw state per amplitude (two IEEE doubles).
inline constexpr std::uint64_t kBytesPerAmplitude = sizeof(Amplitude);

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure surfaced by the library derives from Error,
// so callers can distinguish "our" failures from std exceptions.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A caller passed a value outside a documented domain (bad bound, bad qubit).
struct ArgumentError : Error {
    using Error::Error;
};

/// A run configuration is internally inconsistent (layout, budget, threads).
struct ConfigError : Error {
    using Error::Error;
};

/// An API precondition was violated by the caller (scratch discipline, order).
struct ContractViolation : Error {
    using Error::Error;
};

/// Stored bytes fail integrity checks (checksum, truncation, trailing junk).
struct CorruptionError : Error {
    using Error::Error;
};

/// Bytes are well formed but not in a layout this build understands.
struct FormatError : Error {
    using Error::Error;
};

/// A persisted artifact was produced by an incompatible format revision.
struct VersionError : Error {
    using Error::Error;
};

/// A requested mode exists in the type system but not in this pipeline.
struct UnsupportedModeError : Error {
    using Error::Error;
};

/// A circuit text line failed to parse; carries the 1-based line number.
struct ParseError : Error {
    std::size_t line;
    ParseError(std::size_t line_no, const std::string &what)
        : Error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

/// Block exchange between ranks failed; safe to retry after the cause clears.
struct ExchangeError : Error {
    using Error::Error;
};

/// A file could not be opened, read, written, or moved.
struct IoError : Error {
    using Error::Error;
};

/// The error-bound ladder is at its last level and the budget is still
/// exceeded; carries the index of the gate that could not be absorbed.
struct ResourceExhaustedError : Error {
    std::uint64_t gate_index;
    ResourceExhaustedError(std::uint64_t gate, const std::string &what)
        : Error(what), gate_index(gate) {}
};

// ---------------------------------------------------------------------------
// Small bit utilities.
// ---------------------------------------------------------------------------

constexpr bool is_power_of_two(std::uint64_t x) noexcept { return x != 0 && (x & (x - 1)) == 0; }

/// Exact base-2 logarithm of a power of two.
constexpr unsigned log2_exact(std::uint64_t x) {
    if (!is_power_of_two(x)) {
        throw ArgumentError("log2_exact: value " + std::to_string(x) + " is not a power of two");
    }
    unsigned k = 0;
    while ((x >> k) != 1) {
        ++k;
    }
    return k;
}

// ---------------------------------------------------------------------------
// Big-endian scribes. All multi-byte integers in persisted artifacts are
// big-endian so files are byte-identical across hosts.
// ---------------------------------------------------------------------------

inline void put_u8(std::vector<std::uint8_t> &out, std::uint8_t v) { out.push_back(v); }

inline void put_u32_be(std::vector<std::uint8_t> &out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u64_be(std::vector<std::uint8_t> &out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

/// Writes the IEEE-754 bit pattern of d, big-endian. Exact for every payload
/// including NaNs, so persisted doubles survive round trips bit-for-bit.
inline void put_f64_be(std::vector<std::uint8_t> &out, double d) {
    put_u64_be(out, std::bit_cast<std::uint64_t>(d));
}

/// Bounds-checked big-endian reader over a byte span. Running past the end is
/// reported as corruption, which is what a truncated artifact is.
class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }

    std::uint32_t u32_be() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v = (v << 8) | bytes_[pos_++];
        }
        return v;
    }

    std::uint64_t u64_be() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v = (v << 8) | bytes_[pos_++];
        }
        return v;
    }

    double f64_be() { return std::bit_cast<double>(u64_be()); }

    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto view = bytes_.subspan(pos_, n);
        pos_ += n;
        return view;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

  private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw CorruptionError("input truncated: need " + std::to_string(n) + " bytes at offset " +
                                  std::to_string(pos_) + ", have " + std::to_string(bytes_.size() - pos_));
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Hashing. Cache keys need a fast fingerprint with negligible collision odds
// over at most a few thousand distinct blocks, not cryptographic strength.
// Collisions are additionally guarded by exact size comparison at the site
// of use, so a 128-bit FNV-1a variant is plenty.
// ---------------------------------------------------------------------------

struct Hash128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    friend bool operator==(const Hash128 &, const Hash128 &) = default;
};

inline std::uint64_t fnv1a_64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Two independently-seeded 64-bit FNV-1a passes; the second walks the bytes
/// with a different offset basis so the halves do not cancel jointly.
inline Hash128 fnv1a_128(std::span<const std::uint8_t> bytes) {
    Hash128 h;
    h.hi = fnv1a_64(bytes, 0xcbf29ce484222325ull);
    h.lo = fnv1a_64(bytes, 0x9e3779b97f4a7c15ull);
    return h;
}

} // namespace qcsim
