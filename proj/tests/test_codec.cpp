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

#include "qcsim/codec.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace {

using qcsim::Amplitude;
using qcsim::ArgumentError;
using qcsim::BoundMode;
using qcsim::CodecVariant;
using qcsim::CompressedBlock;
using qcsim::ContractViolation;
using qcsim::CorruptionError;
using qcsim::ErrorBound;
using qcsim::FormatError;
using qcsim::Precision;
using qcsim::UnsupportedModeError;

std::vector<Amplitude> random_block(std::size_t n, std::uint64_t seed, int exp_lo = -8, int exp_hi = 8) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
    std::uniform_int_distribution<int> scale(exp_lo, exp_hi);
    std::vector<Amplitude> amps(n);
    for (auto &a : amps) {
        a = {std::ldexp(mantissa(rng), scale(rng)), std::ldexp(mantissa(rng), scale(rng))};
    }
    return amps;
}

bool bit_identical(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

// ---------------------------------------------------------------------------
// Significant-bit budget.
// ---------------------------------------------------------------------------

TEST(SigBitCount, KnownBounds) {
    EXPECT_EQ(qcsim::sig_bit_count(1e-2, Precision::Double), 19);
    EXPECT_EQ(qcsim::sig_bit_count(0.5, Precision::Double), 13);
    EXPECT_EQ(qcsim::sig_bit_count(1e-5, Precision::Double), 29);
    EXPECT_EQ(qcsim::sig_bit_count(1e-1, Precision::Double), 16);
    EXPECT_EQ(qcsim::sig_bit_count(1e-2, Precision::Single), 16);
    // Very tight bounds clamp at the scalar width.
    EXPECT_EQ(qcsim::sig_bit_count(1e-16, Precision::Double), 64);
    EXPECT_EQ(qcsim::sig_bit_count(1e-8, Precision::Single), 32);
}

TEST(SigBitCount, RejectsBoundsOutsideUnitInterval) {
    EXPECT_THROW(qcsim::sig_bit_count(0.0, Precision::Double), ArgumentError);
    EXPECT_THROW(qcsim::sig_bit_count(1.0, Precision::Double), ArgumentError);
    EXPECT_THROW(qcsim::sig_bit_count(1.5, Precision::Double), ArgumentError);
    EXPECT_THROW(qcsim::sig_bit_count(-0.25, Precision::Double), ArgumentError);
}

// ---------------------------------------------------------------------------
// Truncation.
// ---------------------------------------------------------------------------

TEST(TruncateValue, SinglePrecisionWorkedExample) {
    // 3.9921875 is 1.1111111b * 2^1; keeping 15 leading bits (9 sign+exp, 6
    // mantissa) drops the last set mantissa bit.
    const float t = qcsim::truncate_value(3.9921875f, 15);
    EXPECT_EQ(t, 3.96875f);
    const double rel = (3.9921875 - 3.96875) / 3.9921875;
    EXPECT_NEAR(rel, 0.005871, 1e-6);
}

TEST(TruncateValue, ValuesWithShortMantissasAreFixedPoints) {
    // -1.0 has an all-zero mantissa; keeping only sign and exponent loses
    // nothing.
    EXPECT_EQ(qcsim::truncate_value(-1.0, 12), -1.0);
    EXPECT_EQ(qcsim::truncate_value(2.0, 12), 2.0);
    EXPECT_EQ(qcsim::truncate_value(0.75, 14), 0.75);
}

TEST(TruncateValue, ZeroIsFixedWithItsSign) {
    EXPECT_TRUE(bit_identical(qcsim::truncate_value(0.0, 13), 0.0));
    EXPECT_TRUE(bit_identical(qcsim::truncate_value(-0.0, 13), -0.0));
}

TEST(TruncateValue, SubnormalsFlushToSignedZero) {
    EXPECT_TRUE(bit_identical(qcsim::truncate_value(1e-310, 40), 0.0));
    EXPECT_TRUE(bit_identical(qcsim::truncate_value(-1e-310, 40), -0.0));
}

TEST(TruncateValue, RejectsEmptyBitBudget) {
    EXPECT_THROW(qcsim::truncate_value(1.0, 0), ArgumentError);
    EXPECT_THROW(qcsim::truncate_value(1.0f, -3), ArgumentError);
}

TEST(TruncateValue, MillionValuePropertySweep) {
    // For each bound: error below the bound, magnitude never grows, sign
    // never flips, and truncation is idempotent.
    std::mt19937_64 rng(0x51f0b1u);
    std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
    std::uniform_int_distribution<int> scale(-40, 40);
    const double bounds[] = {1e-5, 1e-3, 1e-1};
    for (const double delta : bounds) {
        const int sig = qcsim::sig_bit_count(delta, Precision::Double);
        double worst = 0.0;
        for (int i = 0; i < 1000000 / 3; ++i) {
            double v = std::ldexp(mantissa(rng), scale(rng));
            if (v == 0.0) {
                continue;
            }
            const double t = qcsim::truncate_value(v, sig);
            worst = std::max(worst, std::abs(v - t) / std::abs(v));
            ASSERT_LE(std::abs(t), std::abs(v));
            ASSERT_EQ(std::signbit(t), std::signbit(v));
            ASSERT_EQ(qcsim::truncate_value(t, sig), t);
        }
        EXPECT_LE(worst, delta) << "bound " << delta;
        EXPECT_GT(worst, 0.0) << "bound " << delta;
    }
}

// ---------------------------------------------------------------------------
// Leading-byte elision.
// ---------------------------------------------------------------------------

TEST(XorLeadingCode, CountsSharedPrefixCappedAtThree) {
    const std::array<std::uint8_t, 8> zeros = {0, 0, 0, 0, 0, 0, 0, 0};
    const std::array<std::uint8_t, 8> same = {0, 0, 0, 0, 0, 0, 0, 0};
    const std::array<std::uint8_t, 8> head_differs = {0xFF, 0, 0, 0, 0, 0, 0, 0};
    const std::array<std::uint8_t, 8> third_differs = {0, 0, 0xAA, 0, 0, 0, 0, 0};
    EXPECT_EQ(qcsim::xor_leading_code(zeros, same).code, 3);
    EXPECT_EQ(qcsim::xor_leading_code(zeros, same).skip, 3);
    EXPECT_EQ(qcsim::xor_leading_code(zeros, head_differs).code, 0);
    EXPECT_EQ(qcsim::xor_leading_code(zeros, head_differs).skip, 0);
    EXPECT_EQ(qcsim::xor_leading_code(zeros, third_differs).code, 2);
    const std::array<std::uint8_t, 8> tail_differs = {0, 0, 0, 0, 0, 0, 0, 1};
    // Seven shared bytes still cap at the 2-bit code maximum.
    EXPECT_EQ(qcsim::xor_leading_code(zeros, tail_differs).code, 3);
}

TEST(XorLeadingCode, PrefixPlusSuffixReconstructsExactly) {
    std::mt19937_64 rng(0xe11de);
    for (int round = 0; round < 100000; ++round) {
        std::array<std::uint8_t, 8> prev;
        std::array<std::uint8_t, 8> cur;
        for (int i = 0; i < 8; ++i) {
            prev[i] = static_cast<std::uint8_t>(rng());
            // Bias toward shared prefixes so all code values occur.
            cur[i] = (rng() % 4 == 0) ? prev[i] : static_cast<std::uint8_t>(rng());
        }
        const auto code = qcsim::xor_leading_code(prev, cur);
        std::array<std::uint8_t, 8> rebuilt;
        for (unsigned i = 0; i < code.skip; ++i) {
            rebuilt[i] = prev[i];
        }
        for (unsigned i = code.skip; i < 8; ++i) {
            rebuilt[i] = cur[i];
        }
        ASSERT_EQ(rebuilt, cur);
    }
}

// ---------------------------------------------------------------------------
// Block round trips.
// ---------------------------------------------------------------------------

TEST(CompressBlock, LosslessRoundTripIsBitExact) {
    auto amps = random_block(4096, 0xabcdef, -300, 300);
    amps[0] = {0.0, -0.0};
    amps[1] = {1e-310, 0.0}; // subnormal survives a lossless round trip
    for (const CodecVariant variant :
         {CodecVariant::SolutionC, CodecVariant::SolutionD, CodecVariant::LosslessOnly}) {
        const auto cb = qcsim::compress_block(amps, ErrorBound::lossless(), variant);
        const auto back = qcsim::decompress_block(cb);
        ASSERT_EQ(back.size(), amps.size());
        for (std::size_t i = 0; i < amps.size(); ++i) {
            ASSERT_TRUE(bit_identical(back[i].real(), amps[i].real())) << i;
            ASSERT_TRUE(bit_identical(back[i].imag(), amps[i].imag())) << i;
        }
    }
}

TEST(CompressBlock, DecompressEqualsElementwiseTruncation) {
    const double delta = 1e-3;
    const int sig = qcsim::sig_bit_count(delta, Precision::Double);
    const auto amps = random_block(2048, 0x1234);
    for (const CodecVariant variant : {CodecVariant::SolutionC, CodecVariant::SolutionD}) {
        const auto cb = qcsim::compress_block(amps, ErrorBound::relative(delta), variant);
        const auto back = qcsim::decompress_block(cb);
        ASSERT_EQ(back.size(), amps.size());
        for (std::size_t i = 0; i < amps.size(); ++i) {
            ASSERT_TRUE(bit_identical(back[i].real(), qcsim::truncate_value(amps[i].real(), sig)));
            ASSERT_TRUE(bit_identical(back[i].imag(), qcsim::truncate_value(amps[i].imag(), sig)));
        }
    }
}

TEST(CompressBlock, HonorsRelativeBoundPointwise) {
    const double delta = 1e-2;
    const auto amps = random_block(1 << 16, 0x77aa);
    const auto cb = qcsim::compress_block(amps, ErrorBound::relative(delta), CodecVariant::SolutionC);
    const auto back = qcsim::decompress_block(cb);
    const double worst =
        qcsim::max_relative_error(qcsim::scalar_view(amps), qcsim::scalar_view(back));
    EXPECT_LE(worst, delta);
    EXPECT_GT(worst, 0.0); // the path is actually lossy
    for (std::size_t i = 0; i < amps.size(); ++i) {
        ASSERT_LE(std::abs(back[i].real()), std::abs(amps[i].real()));
        ASSERT_LE(std::abs(back[i].imag()), std::abs(amps[i].imag()));
    }
}

TEST(CompressBlock, VariantsCAndDDecodeIdenticallyWithDifferentPayloads) {
    // Constant real stream, noisy imaginary stream: regrouping makes the
    // real half one long run, so the payloads must differ while the decoded
    // values match bit for bit.
    std::vector<Amplitude> amps(1 << 12);
    std::mt19937_64 rng(0xddcc);
    std::uniform_real_distribution<double> noise(0.25, 1.0);
    for (auto &a : amps) {
        a = {0.5, noise(rng)};
    }
    const auto bound = ErrorBound::relative(1e-4);
    const auto c = qcsim::compress_block(amps, bound, CodecVariant::SolutionC);
    const auto d = qcsim::compress_block(amps, bound, CodecVariant::SolutionD);
    const auto from_c = qcsim::decompress_block(c);
    const auto from_d = qcsim::decompress_block(d);
    ASSERT_EQ(from_c.size(), from_d.size());
    for (std::size_t i = 0; i < from_c.size(); ++i) {
        ASSERT_TRUE(bit_identical(from_c[i].real(), from_d[i].real()));
        ASSERT_TRUE(bit_identical(from_c[i].imag(), from_d[i].imag()));
    }
    EXPECT_NE(c.payload, d.payload);
    EXPECT_LT(d.payload_length(), c.payload_length());
}

TEST(CompressBlock, ZeroBlockCompressesBelowOnePercent) {
    const std::vector<Amplitude> amps(1 << 20, Amplitude{0.0, 0.0});
    const auto cb = qcsim::compress_block(amps, ErrorBound::relative(1e-3), CodecVariant::SolutionC);
    const std::uint64_t raw = amps.size() * sizeof(Amplitude);
    EXPECT_LT(cb.serialized_size() * 100, raw);
    const auto back = qcsim::decompress_block(cb);
    for (const auto &a : back) {
        ASSERT_EQ(a.real(), 0.0);
        ASSERT_EQ(a.imag(), 0.0);
    }
}

TEST(CompressBlock, DeterministicPayloadBytes) {
    const auto amps = random_block(4096, 0x9e37);
    const auto a = qcsim::compress_block(amps, ErrorBound::relative(1e-4), CodecVariant::SolutionC);
    const auto b = qcsim::compress_block(amps, ErrorBound::relative(1e-4), CodecVariant::SolutionC);
    EXPECT_EQ(a.payload, b.payload);
    EXPECT_EQ(a.checksum, b.checksum);
    EXPECT_EQ(a, b);
}

TEST(CompressBlock, RejectsUnsupportedRequests) {
    const auto amps = random_block(16, 1);
    EXPECT_THROW(qcsim::compress_block(amps, ErrorBound::absolute(1e-4), CodecVariant::SolutionC),
                 UnsupportedModeError);
    EXPECT_THROW(qcsim::compress_block(amps, ErrorBound::relative(1e-4), CodecVariant::LosslessOnly),
                 ArgumentError);
    EXPECT_THROW(qcsim::compress_block({}, ErrorBound::lossless(), CodecVariant::SolutionC),
                 ArgumentError);
}

// ---------------------------------------------------------------------------
// Wire format.
// ---------------------------------------------------------------------------

TEST(CompressedBlockFormat, SerializeParseRoundTrip) {
    const auto amps = random_block(512, 0x4242);
    const auto cb = qcsim::compress_block(amps, ErrorBound::relative(1e-5), CodecVariant::SolutionD);
    const auto bytes = cb.serialize();
    EXPECT_EQ(bytes.size(), cb.serialized_size());
    const auto parsed = CompressedBlock::parse(bytes);
    EXPECT_EQ(parsed, cb);
}

TEST(CompressedBlockFormat, FlippedPayloadByteFailsChecksum) {
    const auto amps = random_block(512, 0x4243);
    auto cb = qcsim::compress_block(amps, ErrorBound::relative(1e-5), CodecVariant::SolutionC);
    auto bytes = cb.serialize();
    bytes[CompressedBlock::kHeaderBytes + bytes.size() / 2 % cb.payload.size()] ^= 0x01;
    EXPECT_THROW(CompressedBlock::parse(bytes), CorruptionError);

    cb.payload[cb.payload.size() / 2] ^= 0x40;
    EXPECT_THROW(qcsim::decompress_block(cb), CorruptionError);
}

TEST(CompressedBlockFormat, TruncatedInputIsCorruption) {
    const auto amps = random_block(512, 0x4244);
    const auto cb = qcsim::compress_block(amps, ErrorBound::lossless(), CodecVariant::SolutionC);
    auto bytes = cb.serialize();
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(CompressedBlock::parse(bytes), CorruptionError);
    bytes.resize(10); // ends inside the fixed header
    EXPECT_THROW(CompressedBlock::parse(bytes), CorruptionError);
}

TEST(CompressedBlockFormat, EmptyPayloadIsCorruption) {
    const auto amps = random_block(64, 0x4245);
    auto cb = qcsim::compress_block(amps, ErrorBound::relative(1e-3), CodecVariant::SolutionC);
    cb.payload.clear();
    cb.checksum = 0; // CRC-32 of the empty string
    EXPECT_THROW(qcsim::decompress_block(cb), CorruptionError);
}

TEST(CompressedBlockFormat, RejectsForeignBytes) {
    const auto amps = random_block(64, 0x4246);
    const auto cb = qcsim::compress_block(amps, ErrorBound::lossless(), CodecVariant::SolutionC);
    auto bytes = cb.serialize();

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(CompressedBlock::parse(bad_magic), FormatError);

    auto bad_codec = bytes;
    bad_codec[4] = 9;
    EXPECT_THROW(CompressedBlock::parse(bad_codec), FormatError);

    auto bad_mode = bytes;
    bad_mode[5] = static_cast<std::uint8_t>(BoundMode::Absolute);
    EXPECT_THROW(CompressedBlock::parse(bad_mode), FormatError);

    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(CompressedBlock::parse(trailing), CorruptionError);
}

// ---------------------------------------------------------------------------
// Error statistics.
// ---------------------------------------------------------------------------

TEST(MaxRelativeError, KnownValues) {
    const std::vector<double> orig = {4.0, -2.0, 0.0};
    const std::vector<double> same = orig;
    EXPECT_EQ(qcsim::max_relative_error(orig, same), 0.0);
    const std::vector<double> off = {3.96, -2.0, 0.0};
    EXPECT_NEAR(qcsim::max_relative_error(orig, off), 0.01, 1e-12);
}

TEST(MaxRelativeError, NonzeroDecodeOfZeroViolatesContract) {
    const std::vector<double> orig = {0.0, 1.0};
    const std::vector<double> bad = {1e-9, 1.0};
    EXPECT_THROW(qcsim::max_relative_error(orig, bad), ContractViolation);
    const std::vector<double> short_seq = {1.0};
    EXPECT_THROW(qcsim::max_relative_error(orig, short_seq), ArgumentError);
}

TEST(Lag1Autocorrelation, KnownSequences) {
    std::vector<double> alternating;
    for (int i = 0; i < 10000; ++i) {
        alternating.push_back(i % 2 == 0 ? 1.0 : -1.0);
    }
    EXPECT_LT(qcsim::lag1_autocorrelation(alternating), -0.99);

    std::vector<double> constant(1000, 3.5);
    EXPECT_EQ(qcsim::lag1_autocorrelation(constant), 0.0);

    std::vector<double> ramp = {1.0};
    EXPECT_EQ(qcsim::lag1_autocorrelation(ramp), 0.0);

    std::mt19937_64 rng(0xfeed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> iid(1000000);
    for (auto &x : iid) {
        x = uni(rng);
    }
    EXPECT_LT(std::abs(qcsim::lag1_autocorrelation(iid)), 0.01);
}

} // namespace
