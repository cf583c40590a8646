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
 * @file codec.hpp
 * @brief Error-bounded compression of amplitude blocks.
 *
 * The pipeline has three stages:
 *
 *  1. Bit-plane truncation. For a pointwise relative bound delta, every
 *     scalar keeps its sign, its full exponent, and just enough leading
 *     mantissa bits that the dropped tail is below delta times the value.
 *     Truncation is toward zero, so magnitudes never grow and signs never
 *     flip, and a zero stays exactly zero.
 *
 *  2. Leading-byte elision against the previous scalar. Consecutive scalars
 *     in a quantum state often share sign and exponent, so their big-endian
 *     packed images share leading bytes. A 2-bit code per scalar says how
 *     many of its leading bytes (0 to 3) repeat the previous scalar's; only
 *     the remaining suffix is emitted.
 *
 *  3. A lossless dictionary-coder backend (deflate) over the code stream
 *     followed by the suffix stream.
 *
 * Solution variant D additionally regroups each block into all real parts
 * followed by all imaginary parts before stage 2, which tightens stage 3 on
 * states whose real and imaginary streams have different structure. Variants
 * C and D decode to identical values; only the payload bytes differ.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "qcsim/common.hpp"

namespace qcsim {

// ---------------------------------------------------------------------------
// Error bounds.
// ---------------------------------------------------------------------------

enum class BoundMode : std::uint8_t {
    Lossless = 0,
    PointwiseRelative = 1,
    Absolute = 2,
};

/// An error tolerance: either exact, a pointwise relative bound
/// |d - d'| <= delta * |d|, or an absolute bound |d - d'| <= e. The
/// simulation pipeline accepts only the first two; Absolute exists for the
/// standalone file codec.
struct ErrorBound {
    BoundMode mode = BoundMode::Lossless;
    double value = 0.0;

    static ErrorBound lossless() { return {BoundMode::Lossless, 0.0}; }

    static ErrorBound relative(double delta) {
        if (!(delta > 0.0) || !(delta < 1.0)) {
            throw ArgumentError("relative error bound must be in (0, 1), got " + std::to_string(delta));
        }
        return {BoundMode::PointwiseRelative, delta};
    }

    static ErrorBound absolute(double e) {
        if (!(e > 0.0)) {
            throw ArgumentError("absolute error bound must be positive, got " + std::to_string(e));
        }
        return {BoundMode::Absolute, e};
    }

    bool is_lossless() const noexcept { return mode == BoundMode::Lossless; }

    friend bool operator==(const ErrorBound &, const ErrorBound &) = default;
};

enum class CodecVariant : std::uint8_t {
    LosslessOnly = 0, ///< deflate over raw scalar bytes, no truncation
    SolutionC = 1,    ///< truncation + leading-byte elision + deflate
    SolutionD = 2,    ///< SolutionC over regrouped real/imag streams
};

inline const char *to_string(CodecVariant v) {
    switch (v) {
    case CodecVariant::LosslessOnly:
        return "lossless-only";
    case CodecVariant::SolutionC:
        return "solution-c";
    case CodecVariant::SolutionD:
        return "solution-d";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Stage 1: bit-plane truncation.
// ---------------------------------------------------------------------------

enum class Precision : std::uint8_t { Single, Double };

/// Number of leading bits of a scalar that must survive so the dropped
/// mantissa tail stays below `delta` times the value: the sign-and-exponent
/// field (9 bits single, 12 bits double) minus floor(log2 delta) mantissa
/// bits. Clamped to the scalar width; delta outside (0, 1) is rejected.
inline int sig_bit_count(double delta, Precision precision) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw ArgumentError("sig_bit_count: bound must be in (0, 1), got " + std::to_string(delta));
    }
    const int sign_exp_bits = precision == Precision::Double ? 12 : 9;
    const int width = precision == Precision::Double ? 64 : 32;
    // ilogb is exactly floor(log2 x) for normal positive x.
    const int exponent = std::ilogb(delta);
    return std::min(width, sign_exp_bits - exponent);
}

/// Keeps the leading `sig_bits` bits of the IEEE-754 image of v and zeroes
/// the rest. Subnormals flush to (signed) zero first; zeros and non-finite
/// values pass through unchanged. The result is truncation toward zero:
/// |result| <= |v| and the sign is preserved.
inline double truncate_value(double v, int sig_bits) {
    if (sig_bits < 1) {
        throw ArgumentError("truncate_value: must keep at least 1 bit");
    }
    if (v == 0.0 || !std::isfinite(v)) {
        return v;
    }
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if (std::fpclassify(v) == FP_SUBNORMAL) {
        return std::bit_cast<double>(bits & 0x8000000000000000ull);
    }
    if (sig_bits >= 64) {
        return v;
    }
    const std::uint64_t mask = ~((std::uint64_t{1} << (64 - sig_bits)) - 1);
    return std::bit_cast<double>(bits & mask);
}

inline float truncate_value(float v, int sig_bits) {
    if (sig_bits < 1) {
        throw ArgumentError("truncate_value: must keep at least 1 bit");
    }
    if (v == 0.0f || !std::isfinite(v)) {
        return v;
    }
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    if (std::fpclassify(v) == FP_SUBNORMAL) {
        return std::bit_cast<float>(bits & 0x80000000u);
    }
    if (sig_bits >= 32) {
        return v;
    }
    const std::uint32_t mask = ~((std::uint32_t{1} << (32 - sig_bits)) - 1);
    return std::bit_cast<float>(bits & mask);
}

// ---------------------------------------------------------------------------
// Stage 2: leading-byte elision.
// ---------------------------------------------------------------------------

/// Result of comparing a scalar's packed image with its predecessor's:
/// `code` is the 2-bit stream symbol, `skip` the number of leading bytes
/// (equal to code) reconstructed from the predecessor instead of the stream.
struct XorLeadingCode {
    std::uint8_t code = 0;
    std::uint8_t skip = 0;
};

namespace detail {

/// Count of identical leading bytes, i.e. leading zero bytes of prev XOR
/// cur, capped at 3 so it fits the 2-bit code.
inline std::uint8_t leading_match(std::span<const std::uint8_t> prev, std::span<const std::uint8_t> cur,
                                  std::size_t width) {
    std::uint8_t n = 0;
    while (n < 3 && n < width && (prev[n] ^ cur[n]) == 0) {
        ++n;
    }
    return n;
}

} // namespace detail

inline XorLeadingCode xor_leading_code(std::span<const std::uint8_t, 8> prev,
                                       std::span<const std::uint8_t, 8> cur) {
    const std::uint8_t n = detail::leading_match(prev, cur, 8);
    return {n, n};
}

// ---------------------------------------------------------------------------
// Stage 3: lossless backend (deflate). Kept behind two functions so the
// backend can be swapped without touching the stages above.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr int kDeflateLevel = 6;

inline std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> in) {
    uLongf dest_len = compressBound(static_cast<uLong>(in.size()));
    std::vector<std::uint8_t> out(dest_len);
    const int rc = compress2(out.data(), &dest_len, in.data(), static_cast<uLong>(in.size()),
                             kDeflateLevel);
    if (rc != Z_OK) {
        throw Error("lossless backend failed to compress (zlib rc " + std::to_string(rc) + ")");
    }
    out.resize(dest_len);
    return out;
}

/// Inflates into a caller-sized buffer. The caller knows a hard upper bound
/// on the plaintext from the block header, so a stream that wants more space
/// is corrupt, not under-provisioned.
inline std::vector<std::uint8_t> inflate_bytes(std::span<const std::uint8_t> in, std::size_t max_out) {
    std::vector<std::uint8_t> out(max_out);
    uLongf dest_len = static_cast<uLongf>(max_out);
    const int rc = uncompress(out.data(), &dest_len, in.data(), static_cast<uLong>(in.size()));
    if (rc != Z_OK) {
        throw CorruptionError("compressed payload does not inflate (zlib rc " + std::to_string(rc) + ")");
    }
    out.resize(dest_len);
    return out;
}

inline std::uint32_t checksum32(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(
        crc32(crc32(0L, nullptr, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Compressed block container and wire format.
// ---------------------------------------------------------------------------

/// One compressed amplitude block plus the metadata needed to decode and
/// validate it. `element_count` is amplitudes, not scalars.
struct CompressedBlock {
    CodecVariant codec = CodecVariant::SolutionC;
    ErrorBound bound;
    std::uint64_t element_count = 0;
    std::vector<std::uint8_t> payload;
    std::uint32_t checksum = 0;

    static constexpr std::array<std::uint8_t, 4> kMagic = {'Q', 'C', 'B', '1'};
    /// Header bytes ahead of the payload in the serialized form.
    static constexpr std::uint64_t kHeaderBytes = 4 + 1 + 1 + 8 + 8 + 8 + 4;

    std::uint64_t payload_length() const noexcept { return payload.size(); }
    std::uint64_t serialized_size() const noexcept { return kHeaderBytes + payload.size(); }

    friend bool operator==(const CompressedBlock &, const CompressedBlock &) = default;

    std::vector<std::uint8_t> serialize() const {
        std::vector<std::uint8_t> out;
        out.reserve(serialized_size());
        out.insert(out.end(), kMagic.begin(), kMagic.end());
        put_u8(out, static_cast<std::uint8_t>(codec));
        put_u8(out, static_cast<std::uint8_t>(bound.mode));
        put_f64_be(out, bound.value);
        put_u64_be(out, element_count);
        put_u64_be(out, payload.size());
        put_u32_be(out, checksum);
        out.insert(out.end(), payload.begin(), payload.end());
        return out;
    }

    /// Parses one block from the front of `bytes`; returns it plus the byte
    /// count consumed. Validates magic, field ranges, and the payload CRC.
    static std::pair<CompressedBlock, std::size_t> parse_prefix(std::span<const std::uint8_t> bytes) {
        ByteReader reader(bytes);
        const auto magic = reader.take(4);
        if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
            throw FormatError("not a compressed block: bad magic");
        }
        CompressedBlock cb;
        const std::uint8_t codec_id = reader.u8();
        if (codec_id > static_cast<std::uint8_t>(CodecVariant::SolutionD)) {
            throw FormatError("unknown codec id " + std::to_string(codec_id));
        }
        cb.codec = static_cast<CodecVariant>(codec_id);
        const std::uint8_t mode_id = reader.u8();
        if (mode_id > static_cast<std::uint8_t>(BoundMode::PointwiseRelative)) {
            throw FormatError("unsupported bound mode " + std::to_string(mode_id) + " in block header");
        }
        cb.bound.mode = static_cast<BoundMode>(mode_id);
        cb.bound.value = reader.f64_be();
        cb.element_count = reader.u64_be();
        if (cb.element_count == 0 || cb.element_count > (std::uint64_t{1} << 30)) {
            throw CorruptionError("implausible element count " + std::to_string(cb.element_count));
        }
        const std::uint64_t payload_len = reader.u64_be();
        cb.checksum = reader.u32_be();
        const auto payload = reader.take(payload_len);
        cb.payload.assign(payload.begin(), payload.end());
        if (detail::checksum32(cb.payload) != cb.checksum) {
            throw CorruptionError("payload checksum mismatch");
        }
        return {std::move(cb), reader.position()};
    }

    /// Parses a span that must contain exactly one block.
    static CompressedBlock parse(std::span<const std::uint8_t> bytes) {
        auto [cb, used] = parse_prefix(bytes);
        if (used != bytes.size()) {
            throw CorruptionError("trailing bytes after compressed block");
        }
        return cb;
    }
};

// ---------------------------------------------------------------------------
// Block compression and decompression.
// ---------------------------------------------------------------------------

namespace detail {

/// Packed image width per scalar for a bound: all 8 bytes when lossless,
/// otherwise just the bytes holding surviving bit planes.
inline std::size_t bytes_per_scalar(const ErrorBound &bound) {
    if (bound.is_lossless()) {
        return 8;
    }
    const int sig = sig_bit_count(bound.value, Precision::Double);
    return static_cast<std::size_t>((sig + 7) / 8);
}

inline void pack_be(double v, std::uint8_t out[8]) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
    }
}

inline double unpack_be(const std::uint8_t in[8]) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits = (bits << 8) | in[i];
    }
    return std::bit_cast<double>(bits);
}

/// The scalar sequence a variant feeds to the byte stages: interleaved
/// re,im pairs for SolutionC (memory order), all re then all im for
/// SolutionD. Index-based so no regrouped copy is materialized.
inline double scalar_at(std::span<const Amplitude> amps, CodecVariant variant, std::size_t idx) {
    const std::size_t n = amps.size();
    if (variant == CodecVariant::SolutionD) {
        return idx < n ? amps[idx].real() : amps[idx - n].imag();
    }
    return (idx & 1) == 0 ? amps[idx / 2].real() : amps[idx / 2].imag();
}

inline void scalar_assign(std::span<Amplitude> amps, CodecVariant variant, std::size_t idx, double v) {
    const std::size_t n = amps.size();
    if (variant == CodecVariant::SolutionD) {
        if (idx < n) {
            amps[idx].real(v);
        } else {
            amps[idx - n].imag(v);
        }
        return;
    }
    if ((idx & 1) == 0) {
        amps[idx / 2].real(v);
    } else {
        amps[idx / 2].imag(v);
    }
}

} // namespace detail

/**
 * Compresses one block of amplitudes under `bound`. Pure function of its
 * arguments: identical input always yields identical payload bytes.
 *
 * Only Lossless and PointwiseRelative bounds are accepted here; Absolute
 * belongs to the standalone file codec, which rewrites it as a relative
 * bound before calling in.
 */
inline CompressedBlock compress_block(std::span<const Amplitude> amps, const ErrorBound &bound,
                                      CodecVariant variant) {
    if (amps.empty()) {
        throw ArgumentError("compress_block: empty block");
    }
    if (bound.mode == BoundMode::Absolute) {
        throw UnsupportedModeError("absolute error bounds are not supported in the block pipeline");
    }
    if (bound.mode == BoundMode::PointwiseRelative) {
        (void)ErrorBound::relative(bound.value); // revalidate range
    }
    if (variant == CodecVariant::LosslessOnly && !bound.is_lossless()) {
        throw ArgumentError("lossless-only codec cannot honor a lossy bound");
    }

    const std::size_t scalars = amps.size() * 2;
    std::vector<std::uint8_t> pre;

    if (variant == CodecVariant::LosslessOnly) {
        pre.resize(scalars * 8);
        for (std::size_t idx = 0; idx < scalars; ++idx) {
            detail::pack_be(detail::scalar_at(amps, variant, idx), &pre[idx * 8]);
        }
    } else {
        const std::size_t width = detail::bytes_per_scalar(bound);
        const int sig = bound.is_lossless() ? 64 : sig_bit_count(bound.value, Precision::Double);
        const std::size_t code_bytes = (scalars + 3) / 4;
        pre.assign(code_bytes, 0);
        pre.reserve(code_bytes + scalars * width);

        std::uint8_t prev[8] = {0};
        std::uint8_t cur[8];
        for (std::size_t idx = 0; idx < scalars; ++idx) {
            const double raw = detail::scalar_at(amps, variant, idx);
            const double kept = bound.is_lossless() ? raw : truncate_value(raw, sig);
            detail::pack_be(kept, cur);
            const std::uint8_t code = detail::leading_match(std::span<const std::uint8_t>(prev, 8),
                                                            std::span<const std::uint8_t>(cur, 8), width);
            pre[idx / 4] |= static_cast<std::uint8_t>(code << ((idx % 4) * 2));
            pre.insert(pre.end(), cur + code, cur + width);
            std::copy(cur, cur + 8, prev);
        }
    }

    CompressedBlock cb;
    cb.codec = variant;
    cb.bound = variant == CodecVariant::LosslessOnly ? ErrorBound::lossless() : bound;
    cb.element_count = amps.size();
    cb.payload = detail::deflate_bytes(pre);
    cb.checksum = detail::checksum32(cb.payload);
    return cb;
}

/// Inverse of compress_block up to the declared bound. Verifies the payload
/// CRC and the internal consistency of the coded stream; any mismatch is
/// corruption.
inline std::vector<Amplitude> decompress_block(const CompressedBlock &cb) {
    if (cb.element_count == 0) {
        throw CorruptionError("compressed block declares zero elements");
    }
    if (detail::checksum32(cb.payload) != cb.checksum) {
        throw CorruptionError("payload checksum mismatch");
    }

    const std::size_t count = static_cast<std::size_t>(cb.element_count);
    const std::size_t scalars = count * 2;
    std::vector<Amplitude> amps(count);

    if (cb.codec == CodecVariant::LosslessOnly) {
        const std::size_t expect = scalars * 8;
        const auto pre = detail::inflate_bytes(cb.payload, expect);
        if (pre.size() != expect) {
            throw CorruptionError("lossless payload inflates to wrong size");
        }
        for (std::size_t idx = 0; idx < scalars; ++idx) {
            detail::scalar_assign(amps, cb.codec, idx, detail::unpack_be(&pre[idx * 8]));
        }
        return amps;
    }

    const std::size_t width = detail::bytes_per_scalar(cb.bound);
    const std::size_t code_bytes = (scalars + 3) / 4;
    const std::size_t max_pre = code_bytes + scalars * width;
    const auto pre = detail::inflate_bytes(cb.payload, max_pre);
    if (pre.size() < code_bytes) {
        throw CorruptionError("coded stream shorter than its code section");
    }

    std::size_t pos = code_bytes;
    std::uint8_t prev[8] = {0};
    std::uint8_t cur[8] = {0};
    for (std::size_t idx = 0; idx < scalars; ++idx) {
        const std::uint8_t code = (pre[idx / 4] >> ((idx % 4) * 2)) & 0x3;
        const std::size_t suffix = width - code;
        if (pre.size() - pos < suffix) {
            throw CorruptionError("coded stream ends inside scalar " + std::to_string(idx));
        }
        std::copy(prev, prev + code, cur);
        std::copy(pre.begin() + pos, pre.begin() + pos + suffix, cur + code);
        std::fill(cur + width, cur + 8, 0);
        pos += suffix;
        detail::scalar_assign(amps, cb.codec, idx, detail::unpack_be(cur));
        std::copy(cur, cur + 8, prev);
    }
    if (pos != pre.size()) {
        throw CorruptionError("trailing bytes inside coded stream");
    }
    return amps;
}

// ---------------------------------------------------------------------------
// Error statistics over original/decoded scalar streams.
// ---------------------------------------------------------------------------

/// Flattens an amplitude span to its scalar stream (re, im interleaved).
inline std::span<const double> scalar_view(std::span<const Amplitude> amps) {
    // std::complex<T> is layout-compatible with T[2] by the standard.
    return {reinterpret_cast<const double *>(amps.data()), amps.size() * 2};
}

/// Largest |d - d'| / |d| over nonzero originals. A zero original must have
/// decoded to exactly zero; anything else breaks the codec's contract.
inline double max_relative_error(std::span<const double> original, std::span<const double> decoded) {
    if (original.size() != decoded.size()) {
        throw ArgumentError("max_relative_error: length mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double d = original[i];
        if (d == 0.0) {
            if (decoded[i] != 0.0) {
                throw ContractViolation("zero scalar decoded to a nonzero value");
            }
            continue;
        }
        worst = std::max(worst, std::abs(d - decoded[i]) / std::abs(d));
    }
    return worst;
}

/// Per-scalar relative errors for nonzero originals, in stream order.
inline std::vector<double> relative_errors(std::span<const double> original,
                                           std::span<const double> decoded) {
    if (original.size() != decoded.size()) {
        throw ArgumentError("relative_errors: length mismatch");
    }
    std::vector<double> errs;
    errs.reserve(original.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double d = original[i];
        if (d == 0.0) {
            if (decoded[i] != 0.0) {
                throw ContractViolation("zero scalar decoded to a nonzero value");
            }
            continue;
        }
        errs.push_back(std::abs(d - decoded[i]) / std::abs(d));
    }
    return errs;
}

/// Pearson correlation between consecutive entries. Compression artifacts
/// that depend on neighboring values show up here; independent errors give
/// values near zero. A constant sequence has no correlation structure and
/// reports 0.
inline double lag1_autocorrelation(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : xs) {
        mean += x;
    }
    mean /= static_cast<double>(n);
    double denom = 0.0;
    double numer = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = xs[i] - mean;
        denom += d * d;
        if (i + 1 < n) {
            numer += d * (xs[i + 1] - mean);
        }
    }
    if (denom == 0.0) {
        return 0.0;
    }
    return numer / denom;
}

} // namespace qcsim
