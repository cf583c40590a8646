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
 * @file qcsim_main.cpp
 * @brief Command-line front end: run simulations, drive the standalone
 *        block codec, emit reports and checkpoints.
 *
 * Exit codes are part of the interface and stay stable:
 *   0  success
 *   1  unclassified failure (internal errors included)
 *   2  configuration problem (flags, layout, resume mismatch)
 *   3  circuit text parse error
 *   4  memory budget exhausted at the top of the accuracy ladder
 *   5  file I/O, checkpoint, or compressed-input damage
 */

#include "qcsim/checkpoint.hpp"
#include "qcsim/circuits.hpp"
#include "qcsim/codec.hpp"
#include "qcsim/common.hpp"
#include "qcsim/runtime.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitParse = 3;
constexpr int kExitResources = 4;
constexpr int kExitIo = 5;

/// One mapping for every command so the codes cannot drift apart.
int classify(const std::exception &e) {
    if (dynamic_cast<const qcsim::ParseError *>(&e)) {
        return kExitParse;
    }
    if (dynamic_cast<const qcsim::ResourceExhaustedError *>(&e)) {
        return kExitResources;
    }
    if (dynamic_cast<const qcsim::IoError *>(&e) || dynamic_cast<const qcsim::FormatError *>(&e) ||
        dynamic_cast<const qcsim::VersionError *>(&e) ||
        dynamic_cast<const qcsim::CorruptionError *>(&e)) {
        return kExitIo;
    }
    if (dynamic_cast<const qcsim::ConfigError *>(&e) || dynamic_cast<const qcsim::ArgumentError *>(&e) ||
        dynamic_cast<const qcsim::UnsupportedModeError *>(&e)) {
        return kExitConfig;
    }
    return kExitFailure;
}

int report_failure(const char *what, const std::exception &e) {
    std::cerr << "qcsim: " << what << ": " << e.what() << "\n";
    return classify(e);
}

// ---------------------------------------------------------------------------
// Flag value parsing.
// ---------------------------------------------------------------------------

/// Byte sizes accept binary suffixes: 65536, 64K, 64KiB, 1GiB, 2M. K, M, G,
/// and T are 1024-based with or without the iB tail.
std::uint64_t parse_size(const std::string &text) {
    static const std::regex pattern(R"(^\s*([0-9]+)\s*([KkMmGgTt])?(?:[Ii]?[Bb])?\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) {
        throw qcsim::ConfigError("unreadable size '" + text + "' (try 65536, 64KiB, 1GiB)");
    }
    std::uint64_t value = 0;
    try {
        value = std::stoull(m[1].str());
    } catch (const std::exception &) {
        throw qcsim::ConfigError("size out of range: '" + text + "'");
    }
    int shift = 0;
    if (m[2].matched) {
        switch (std::tolower(static_cast<unsigned char>(m[2].str()[0]))) {
        case 'k':
            shift = 10;
            break;
        case 'm':
            shift = 20;
            break;
        case 'g':
            shift = 30;
            break;
        default:
            shift = 40;
            break;
        }
    }
    if (shift > 0 && value > (std::uint64_t{1} << (64 - shift))) {
        throw qcsim::ConfigError("size overflows 64 bits: '" + text + "'");
    }
    return value << shift;
}

/// Ladder spellings match the level values exactly: lossless, 1e-5, 1e-4,
/// 1e-3, 1e-2, 1e-1.
int parse_ladder_level(const std::string &text) {
    static const char *const names[] = {"lossless", "1e-5", "1e-4", "1e-3", "1e-2", "1e-1"};
    for (int i = 0; i < static_cast<int>(std::size(names)); ++i) {
        if (text == names[i]) {
            return i;
        }
    }
    throw qcsim::ConfigError("unknown ladder level '" + text +
                             "' (expected lossless, 1e-5, 1e-4, 1e-3, 1e-2, or 1e-1)");
}

qcsim::CodecVariant parse_codec_name(const std::string &text) {
    if (text == "c" || text == "C") {
        return qcsim::CodecVariant::SolutionC;
    }
    if (text == "d" || text == "D") {
        return qcsim::CodecVariant::SolutionD;
    }
    throw qcsim::ConfigError("unknown codec '" + text + "' (expected c or d)");
}

unsigned threads_from_env() {
    const char *raw = std::getenv("QCSIM_THREADS");
    if (raw == nullptr || *raw == '\0') {
        return 0;
    }
    char *end = nullptr;
    const unsigned long value = std::strtoul(raw, &end, 10);
    if (end == raw || *end != '\0' || value > 4096) {
        throw qcsim::ConfigError(std::string("QCSIM_THREADS is not a thread count: '") + raw + "'");
    }
    return static_cast<unsigned>(value);
}

// ---------------------------------------------------------------------------
// File helpers.
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw qcsim::IoError("cannot open " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw qcsim::IoError("read failed on " + path);
    }
    return bytes;
}

void write_file_bytes(const std::string &path, const void *data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw qcsim::IoError("cannot open " + path + " for writing");
    }
    out.write(static_cast<const char *>(data), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
        throw qcsim::IoError("write failed on " + path);
    }
}

std::string read_file_text(const std::string &path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

// ---------------------------------------------------------------------------
// run subcommand.
// ---------------------------------------------------------------------------

struct RunOptions {
    unsigned qubits = 0;
    std::uint32_t ranks = 1;
    std::uint64_t blocks_per_rank = 1;
    std::string budget;
    std::string circuit_path;
    std::string builtin;
    std::string ladder;
    std::string codec = "c";
    std::uint64_t seed = 0;
    bool no_cache = false;
    std::string checkpoint_path;
    std::uint64_t checkpoint_every = 0;
    std::string resume_path;
    std::string report_path;
    std::uint64_t shots = 0;

    std::uint64_t grover_marked = 0;
    unsigned grover_iterations = 0;
    unsigned qaoa_rounds = 1;
    unsigned random_rows = 0;
    unsigned random_cols = 0;
    unsigned random_depth = 11;
};

/// The qft builtin prepares a nontrivial input state by flipping a seeded
/// random subset of qubits first; a transform of |0...0> alone is flat and
/// tells compression nothing.
qcsim::Circuit qft_with_prep(unsigned qubits, std::uint64_t seed) {
    qcsim::detail::SplitMix64 rng(seed);
    qcsim::Circuit c;
    c.qubits = qubits;
    for (unsigned q = 0; q < qubits; ++q) {
        if (rng.next() & 1u) {
            c.gates.push_back(qcsim::gates::x(q));
        }
    }
    const qcsim::Circuit transform = qcsim::qft(qubits);
    c.gates.insert(c.gates.end(), transform.gates.begin(), transform.gates.end());
    return c;
}

qcsim::Circuit build_circuit(const RunOptions &opt) {
    if (!opt.circuit_path.empty()) {
        return qcsim::parse_circuit(read_file_text(opt.circuit_path), opt.qubits);
    }
    if (opt.builtin == "grover") {
        return qcsim::grover(opt.qubits, opt.grover_marked, opt.grover_iterations);
    }
    if (opt.builtin == "qft") {
        return qft_with_prep(opt.qubits, opt.seed);
    }
    if (opt.builtin == "qaoa") {
        return qcsim::qaoa_maxcut(opt.qubits, opt.qaoa_rounds, opt.seed);
    }
    if (opt.builtin == "random") {
        if (opt.random_rows == 0 || opt.random_cols == 0) {
            throw qcsim::ConfigError("--builtin random needs --rows and --cols");
        }
        if (static_cast<std::uint64_t>(opt.random_rows) * opt.random_cols != opt.qubits) {
            throw qcsim::ConfigError("--rows times --cols must equal --qubits");
        }
        return qcsim::random_sampling_circuit(opt.random_rows, opt.random_cols, opt.random_depth, opt.seed);
    }
    throw qcsim::ConfigError("unknown builtin '" + opt.builtin +
                             "' (expected grover, qft, qaoa, or random)");
}

json report_to_json(const qcsim::SimulationReport &rep) {
    json j;
    j["qubits"] = rep.qubits;
    j["ranks"] = rep.ranks;
    j["blocks_per_rank"] = rep.blocks_per_rank;
    j["block_len"] = rep.block_len;
    j["worker_threads"] = rep.worker_threads;
    j["gate_count"] = rep.gate_count;
    j["executed_gates"] = rep.executed_gates;
    j["fidelity_lower_bound"] = rep.fidelity_lower_bound;
    j["wall_seconds"] = rep.wall_seconds;
    j["seconds_per_gate"] = rep.seconds_per_gate;
    j["compression_share"] = rep.compression_share;
    j["decompression_share"] = rep.decompression_share;
    j["communication_share"] = rep.communication_share;
    j["computation_share"] = rep.computation_share;
    j["min_compression_ratio"] = rep.min_compression_ratio;
    j["max_compressed_bytes"] = rep.max_compressed_bytes;
    j["peak_accounted_bytes"] = rep.peak_accounted_bytes;
    j["final_accounted_bytes"] = rep.final_accounted_bytes;
    j["budget_bytes"] = rep.budget_bytes;
    j["final_ladder_index"] = rep.final_ladder_index;
    j["final_ladder_delta"] = qcsim::LadderState::kLevels[static_cast<std::size_t>(rep.final_ladder_index)];
    j["ladder_forced"] = rep.ladder_forced;
    json esc = json::array();
    for (const auto &e : rep.escalations) {
        esc.push_back({{"gate", e.gate_index}, {"level", e.level}});
    }
    j["escalations"] = std::move(esc);
    j["cache_enabled"] = rep.cache_enabled;
    j["cache_lookups"] = rep.cache_lookups;
    j["cache_hits"] = rep.cache_hits;
    j["caches_disabled"] = rep.caches_disabled;
    j["pair_updates"] = rep.pair_updates;
    j["blocks_processed"] = rep.blocks_processed;
    j["blocks_skipped"] = rep.blocks_skipped;
    j["exchanges"] = rep.exchanges;
    j["exchanged_bytes"] = rep.exchanged_bytes;
    return j;
}

/// Key-value text mirror of the JSON report, same keys, one per line.
void print_report(std::ostream &os, const json &j) {
    for (const auto &[key, value] : j.items()) {
        os << key << ": " << value.dump() << "\n";
    }
}

int cmd_run(const RunOptions &opt) {
    qcsim::RunConfig cfg;
    qcsim::Circuit circuit;
    try {
        cfg.qubits = opt.qubits;
        cfg.ranks = opt.ranks;
        cfg.blocks_per_rank = opt.blocks_per_rank;
        if (!opt.budget.empty()) {
            cfg.budget_bytes = parse_size(opt.budget);
        }
        if (!opt.ladder.empty()) {
            cfg.forced_level = parse_ladder_level(opt.ladder);
        }
        cfg.codec = parse_codec_name(opt.codec);
        cfg.cache_enabled = !opt.no_cache;
        cfg.threads = threads_from_env();
        cfg.seed = opt.seed;
        cfg.checkpoint_path = opt.checkpoint_path;
        cfg.checkpoint_every = opt.checkpoint_every;
        if (cfg.checkpoint_every > 0 && cfg.checkpoint_path.empty()) {
            throw qcsim::ConfigError("--checkpoint-every needs --checkpoint PATH");
        }
        circuit = build_circuit(opt);
    } catch (const std::exception &e) {
        return report_failure("run setup", e);
    }

    try {
        std::optional<qcsim::Simulation> sim;
        if (!opt.resume_path.empty()) {
            sim.emplace(cfg, std::move(circuit), opt.resume_path);
        } else {
            sim.emplace(cfg, std::move(circuit));
        }

        const qcsim::SimulationReport rep = sim->run();
        json j = report_to_json(rep);
        if (opt.shots > 0) {
            const std::vector<std::uint64_t> outcomes = sim->sample(opt.shots, opt.seed);
            json samples = json::array();
            for (std::uint64_t value : outcomes) {
                samples.push_back(qcsim::Simulation::bitstring(value, rep.qubits));
            }
            j["samples"] = std::move(samples);
        }

        print_report(std::cout, j);
        if (!opt.report_path.empty()) {
            const std::string text = j.dump(2) + "\n";
            write_file_bytes(opt.report_path, text.data(), text.size());
        }
        return kExitOk;
    } catch (const std::exception &e) {
        return report_failure("run", e);
    }
}

// ---------------------------------------------------------------------------
// codec subcommand.
// ---------------------------------------------------------------------------

struct CodecOptions {
    std::string input_path;
    std::string output_path;
    std::string stats_path;
    std::string codec = "c";
    double relative_bound = 0.0;
    double absolute_bound = 0.0;
    bool lossless = false;
};

/// Raw files hold host-order IEEE doubles, interleaved re,im per amplitude.
std::vector<qcsim::Amplitude> read_amplitudes(const std::string &path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.empty() || bytes.size() % 16 != 0) {
        throw qcsim::IoError(path + " must hold a nonzero even count of 8-byte scalars (re,im pairs)");
    }
    std::vector<qcsim::Amplitude> amps(bytes.size() / 16);
    std::memcpy(amps.data(), bytes.data(), bytes.size());
    return amps;
}

/// An absolute tolerance e rewrites to the relative bound the pipeline
/// understands: |d - d'| <= delta * |d| <= e holds for every scalar when
/// delta = e / max|d|. Clamping down only tightens; clamping up stops at
/// 2^-52, where truncation keeps the whole mantissa and the error is zero.
double relative_from_absolute(double e, std::span<const double> scalars) {
    double peak = 0.0;
    for (double d : scalars) {
        peak = std::max(peak, std::abs(d));
    }
    if (peak == 0.0) {
        return 0.5;
    }
    return std::clamp(e / peak, std::ldexp(1.0, -52), 0.5);
}

json error_stats(std::span<const double> original, std::span<const double> decoded, double delta) {
    json j;
    j["max_relative_error"] = qcsim::max_relative_error(original, decoded);
    double worst_abs = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        worst_abs = std::max(worst_abs, std::abs(original[i] - decoded[i]));
    }
    j["max_absolute_error"] = worst_abs;

    std::vector<double> errs = qcsim::relative_errors(original, decoded);
    j["lag1_autocorrelation"] = qcsim::lag1_autocorrelation(errs);

    // Quantiles of error / bound; an error-bounded codec keeps all of them
    // at or below 1.
    json cdf = json::object();
    if (!errs.empty() && delta > 0.0) {
        for (double &err : errs) {
            err /= delta;
        }
        std::sort(errs.begin(), errs.end());
        for (double q : {0.25, 0.50, 0.75, 0.90, 0.95, 0.99, 1.00}) {
            const std::size_t idx =
                std::min(errs.size() - 1, static_cast<std::size_t>(q * static_cast<double>(errs.size())));
            char key[8];
            std::snprintf(key, sizeof key, "p%02d", static_cast<int>(q * 100.0 + 0.5));
            cdf[key] = errs[idx];
        }
    }
    j["normalized_error_quantiles"] = std::move(cdf);
    return j;
}

int cmd_codec_compress(const CodecOptions &opt) {
    try {
        const int modes = (opt.lossless ? 1 : 0) + (opt.relative_bound > 0.0 ? 1 : 0) +
                          (opt.absolute_bound > 0.0 ? 1 : 0);
        if (modes != 1) {
            throw qcsim::ConfigError("pick exactly one of --lossless, --bound, --absolute");
        }
        const qcsim::CodecVariant variant = parse_codec_name(opt.codec);
        const std::vector<qcsim::Amplitude> amps = read_amplitudes(opt.input_path);
        const std::span<const double> original = qcsim::scalar_view(amps);

        qcsim::ErrorBound bound = qcsim::ErrorBound::lossless();
        if (opt.relative_bound > 0.0) {
            bound = qcsim::ErrorBound::relative(opt.relative_bound);
        } else if (opt.absolute_bound > 0.0) {
            bound = qcsim::ErrorBound::relative(relative_from_absolute(opt.absolute_bound, original));
        }

        const qcsim::CompressedBlock cb = qcsim::compress_block(amps, bound, variant);
        const std::vector<std::uint8_t> wire = cb.serialize();
        write_file_bytes(opt.output_path, wire.data(), wire.size());

        const std::vector<qcsim::Amplitude> back = qcsim::decompress_block(cb);
        json stats = error_stats(original, qcsim::scalar_view(back),
                                 bound.is_lossless() ? 0.0 : bound.value);
        stats["scalars"] = original.size();
        stats["raw_bytes"] = amps.size() * sizeof(qcsim::Amplitude);
        stats["compressed_bytes"] = wire.size();
        stats["compression_ratio"] =
            static_cast<double>(amps.size() * sizeof(qcsim::Amplitude)) / static_cast<double>(wire.size());
        stats["codec"] = qcsim::to_string(variant);
        stats["bound_mode"] = bound.is_lossless() ? "lossless" : "relative";
        stats["bound_value"] = bound.value;
        if (opt.absolute_bound > 0.0) {
            stats["requested_absolute_bound"] = opt.absolute_bound;
        }

        print_report(std::cout, stats);
        if (!opt.stats_path.empty()) {
            const std::string text = stats.dump(2) + "\n";
            write_file_bytes(opt.stats_path, text.data(), text.size());
        }
        return kExitOk;
    } catch (const std::exception &e) {
        return report_failure("codec compress", e);
    }
}

int cmd_codec_decompress(const CodecOptions &opt) {
    try {
        const std::vector<std::uint8_t> wire = read_file_bytes(opt.input_path);
        qcsim::CompressedBlock cb;
        try {
            cb = qcsim::CompressedBlock::parse(wire);
        } catch (const qcsim::Error &e) {
            throw qcsim::CorruptionError(opt.input_path + ": " + e.what());
        }
        const std::vector<qcsim::Amplitude> amps = qcsim::decompress_block(cb);
        write_file_bytes(opt.output_path, amps.data(), amps.size() * sizeof(qcsim::Amplitude));
        std::cout << "scalars: " << amps.size() * 2 << "\n";
        return kExitOk;
    } catch (const std::exception &e) {
        return report_failure("codec decompress", e);
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Compressed full-state quantum circuit simulator"};
    app.require_subcommand(1);

    RunOptions run;
    CLI::App *run_cmd = app.add_subcommand("run", "Simulate a circuit and print a report");
    run_cmd->add_option("--qubits", run.qubits, "Circuit width in qubits")->required();
    run_cmd->add_option("--ranks", run.ranks, "State partitions (power of two)");
    run_cmd->add_option("--blocks-per-rank", run.blocks_per_rank, "Compression blocks per rank (power of two)");
    run_cmd->add_option("--budget", run.budget, "Total memory budget, e.g. 64MiB (default unlimited)");
    auto *circuit_opt = run_cmd->add_option("--circuit", run.circuit_path, "Circuit text file");
    auto *builtin_opt =
        run_cmd->add_option("--builtin", run.builtin, "Generated circuit: grover, qft, qaoa, random");
    circuit_opt->excludes(builtin_opt);
    builtin_opt->excludes(circuit_opt);
    run_cmd->add_option("--ladder", run.ladder,
                        "Pin the accuracy ladder: lossless, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1");
    run_cmd->add_option("--codec", run.codec, "Block codec: c or d");
    run_cmd->add_option("--seed", run.seed, "Seed for generators and sampling");
    run_cmd->add_flag("--no-cache", run.no_cache, "Disable the gate result cache");
    run_cmd->add_option("--checkpoint", run.checkpoint_path, "Checkpoint file path");
    run_cmd->add_option("--checkpoint-every", run.checkpoint_every, "Checkpoint interval in gates");
    run_cmd->add_option("--resume", run.resume_path, "Resume from a checkpoint file");
    run_cmd->add_option("--report", run.report_path, "Write the report as JSON to this path");
    run_cmd->add_option("--shots", run.shots, "Sample this many measurement outcomes");
    run_cmd->add_option("--marked", run.grover_marked, "grover: marked basis state");
    run_cmd->add_option("--iterations", run.grover_iterations, "grover: iteration count (0 = optimal)");
    run_cmd->add_option("--rounds", run.qaoa_rounds, "qaoa: cost/mixer rounds");
    run_cmd->add_option("--rows", run.random_rows, "random: grid rows");
    run_cmd->add_option("--cols", run.random_cols, "random: grid columns");
    run_cmd->add_option("--depth", run.random_depth, "random: entangling cycles");

    CodecOptions codec;
    CLI::App *codec_cmd = app.add_subcommand("codec", "Standalone block codec");
    codec_cmd->require_subcommand(1);
    CLI::App *compress_cmd = codec_cmd->add_subcommand("compress", "Compress a raw double file");
    compress_cmd->add_option("--input", codec.input_path, "Raw doubles, host order, re,im interleaved")
        ->required();
    compress_cmd->add_option("--output", codec.output_path, "Compressed block file")->required();
    compress_cmd->add_option("--codec", codec.codec, "Block codec: c or d");
    compress_cmd->add_option("--bound", codec.relative_bound, "Pointwise relative error bound in (0, 1)");
    compress_cmd->add_option("--absolute", codec.absolute_bound, "Pointwise absolute error bound");
    compress_cmd->add_flag("--lossless", codec.lossless, "Exact compression");
    compress_cmd->add_option("--stats", codec.stats_path, "Write codec stats as JSON to this path");
    CLI::App *decompress_cmd = codec_cmd->add_subcommand("decompress", "Invert a compressed block file");
    decompress_cmd->add_option("--input", codec.input_path, "Compressed block file")->required();
    decompress_cmd->add_option("--output", codec.output_path, "Raw doubles, host order")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run_cmd->parsed()) {
            if (run.circuit_path.empty() && run.builtin.empty()) {
                throw qcsim::ConfigError("pick a circuit source: --circuit FILE or --builtin NAME");
            }
            return cmd_run(run);
        }
        if (compress_cmd->parsed()) {
            return cmd_codec_compress(codec);
        }
        return cmd_codec_decompress(codec);
    } catch (const std::exception &e) {
        return report_failure("qcsim", e);
    }
}
