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
 * @file runtime.hpp
 * @brief The simulation driver: accuracy ladder, fidelity ledger, and the
 *        threaded gate loop over per-rank block stores.
 *
 * The state lives in one BlockStore per rank. run() walks the circuit one
 * gate at a time; worker threads own contiguous rank ranges and meet at two
 * barriers per gate (one after cross-rank blocks are posted, one after the
 * gate is applied everywhere). Results are identical for any rank count,
 * any thread count, and across checkpoint interruptions, because every
 * numeric decision depends only on per-rank state, never on scheduling.
 *
 * Memory control: when a rank's accounted bytes cross 95% of its budget
 * share after a store, that rank raises its own error bound immediately and
 * publishes the new ladder level, which every rank adopts at the next gate
 * boundary. The ladder only tightens toward its loosest level; running out
 * of levels raises ResourceExhaustedError.
 */

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qcsim/blockstore.hpp"
#include "qcsim/checkpoint.hpp"
#include "qcsim/circuits.hpp"
#include "qcsim/codec.hpp"
#include "qcsim/common.hpp"
#include "qcsim/gate_engine.hpp"
#include "qcsim/gates.hpp"
#include "qcsim/layout.hpp"

namespace qcsim {

// ---------------------------------------------------------------------------
// Accuracy ladder.
// ---------------------------------------------------------------------------

/**
 * The fixed sequence of pointwise relative error bounds a run may move
 * through, loosest last. Level 0 is lossless. The index never decreases;
 * each escalation is logged with the gate that caused it.
 */
struct LadderState {
    struct Escalation {
        std::uint64_t gate_index = 0;
        int level = 0;

        bool operator==(const Escalation &) const = default;
    };

    static constexpr std::array<double, 6> kLevels{0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};

    static constexpr int level_count() noexcept { return static_cast<int>(kLevels.size()); }

    static ErrorBound bound_for(int index) {
        if (index < 0 || index >= level_count()) {
            throw ArgumentError("ladder level " + std::to_string(index) + " out of range");
        }
        return index == 0 ? ErrorBound::lossless() : ErrorBound::relative(kLevels[static_cast<std::size_t>(index)]);
    }

    int index = 0;
    bool forced = false; ///< pinned by configuration; never escalates
    std::vector<Escalation> history;

    double delta() const noexcept { return kLevels[static_cast<std::size_t>(index)]; }
    ErrorBound bound() const { return bound_for(index); }
};

/// The escalation trigger: accounted bytes past 95% of the budget. A zero
/// budget means unlimited and never triggers.
inline bool ladder_trigger(std::uint64_t accounted_bytes, std::uint64_t budget_bytes) noexcept {
    return budget_bytes != 0 &&
           static_cast<double>(accounted_bytes) > 0.95 * static_cast<double>(budget_bytes);
}

/**
 * Advances the ladder one level if the trigger fires. Returns whether it
 * moved. Throws ResourceExhaustedError when the trigger fires on a pinned
 * ladder or at the last level; the exception carries `gate_index`.
 */
inline bool escalate_if_needed(LadderState &ladder, std::uint64_t accounted_bytes,
                               std::uint64_t budget_bytes, std::uint64_t gate_index) {
    if (!ladder_trigger(accounted_bytes, budget_bytes)) {
        return false;
    }
    if (ladder.forced) {
        throw ResourceExhaustedError(gate_index,
                                     "compressed state exceeds the memory budget at the pinned accuracy level");
    }
    if (ladder.index + 1 >= LadderState::level_count()) {
        throw ResourceExhaustedError(gate_index,
                                     "compressed state exceeds the memory budget at the loosest accuracy level");
    }
    ladder.index += 1;
    ladder.history.push_back({gate_index, ladder.index});
    return true;
}

// ---------------------------------------------------------------------------
// Fidelity ledger.
// ---------------------------------------------------------------------------

/// Lower bound on state fidelity after lossy gates: product of (1 - delta)
/// over the per-gate bounds in effect.
inline double fidelity_lower_bound(std::span<const double> gate_deltas) noexcept {
    double f = 1.0;
    for (double delta : gate_deltas) {
        f *= 1.0 - delta;
    }
    return f;
}

/// One entry per executed gate: the loosest error bound any rank used while
/// applying it. Never renormalizes and never forgets.
class FidelityLedger {
  public:
    void record(double delta) { deltas_.push_back(delta); }

    double lower_bound() const noexcept { return fidelity_lower_bound(deltas_); }

    const std::vector<double> &deltas() const noexcept { return deltas_; }

    void restore(std::vector<double> deltas) { deltas_ = std::move(deltas); }

  private:
    std::vector<double> deltas_;
};

// ---------------------------------------------------------------------------
// Run configuration and report.
// ---------------------------------------------------------------------------

class Simulation;

/// Optional instrumentation. `after_gate` runs at the gate barrier with all
/// ranks quiesced; `on_store` is forwarded to every rank's BlockStore.
struct RunHooks {
    std::function<void(std::uint64_t gate_index, Simulation &sim)> after_gate;
    BlockStore::StoreHook on_store;
};

struct RunConfig {
    unsigned qubits = 0;
    std::uint32_t ranks = 1;
    std::uint64_t blocks_per_rank = 1;

    /// Total bytes across all ranks; 0 means unlimited. Each rank gets an
    /// equal share. Must exceed the scratch floor (two buffers per rank).
    std::uint64_t budget_bytes = 0;

    /// Pins the ladder to one level for the whole run (no escalation).
    std::optional<int> forced_level;

    CodecVariant codec = CodecVariant::SolutionC;
    bool cache_enabled = true;

    /// Worker threads; 0 means one per rank. Capped at the rank count.
    unsigned threads = 0;

    /// Default seed for sample().
    std::uint64_t seed = 0;

    /// Snapshot every this many gates into `checkpoint_path` (0 = never).
    std::uint64_t checkpoint_every = 0;
    std::string checkpoint_path;

    RunHooks hooks;
};

/// Everything a finished (or resumed-and-finished) run can tell about
/// itself. Wall-clock derived fields vary between runs; every counter is
/// reproducible for a fixed configuration.
struct SimulationReport {
    unsigned qubits = 0;
    std::uint32_t ranks = 0;
    std::uint64_t blocks_per_rank = 0;
    std::uint64_t block_len = 0;
    unsigned worker_threads = 0;

    std::uint64_t gate_count = 0;     ///< gates in the circuit
    std::uint64_t executed_gates = 0; ///< gates this run() call applied

    double fidelity_lower_bound = 1.0;

    double wall_seconds = 0.0;
    double seconds_per_gate = 0.0;
    /// Percentages of total worker time (threads x wall seconds).
    double compression_share = 0.0;
    double decompression_share = 0.0;
    double communication_share = 0.0;
    double computation_share = 0.0;

    /// Raw state bytes over the largest compressed-state total seen at any
    /// gate boundary of this run.
    double min_compression_ratio = 0.0;
    std::uint64_t max_compressed_bytes = 0;
    std::uint64_t peak_accounted_bytes = 0;
    std::uint64_t final_accounted_bytes = 0;
    std::uint64_t budget_bytes = 0;

    int final_ladder_index = 0;
    bool ladder_forced = false;
    std::vector<LadderState::Escalation> escalations;

    bool cache_enabled = false;
    std::uint64_t cache_lookups = 0;
    std::uint64_t cache_hits = 0;
    std::uint32_t caches_disabled = 0;

    std::uint64_t pair_updates = 0;
    std::uint64_t blocks_processed = 0;
    std::uint64_t blocks_skipped = 0;
    std::uint64_t exchanges = 0;
    std::uint64_t exchanged_bytes = 0;
};

// ---------------------------------------------------------------------------
// Simulation.
// ---------------------------------------------------------------------------

class Simulation {
  public:
    Simulation(RunConfig config, Circuit circuit)
        : Simulation(std::move(config), std::move(circuit), nullptr) {}

    /// Continues from an in-memory snapshot.
    Simulation(RunConfig config, Circuit circuit, const CheckpointData &resume)
        : Simulation(std::move(config), std::move(circuit), &resume) {}

    /// Continues from a snapshot file.
    Simulation(RunConfig config, Circuit circuit, const std::string &checkpoint_path)
        : Simulation(std::move(config), std::move(circuit), load_checkpoint_file(checkpoint_path)) {}

    Simulation(const Simulation &) = delete;
    Simulation &operator=(const Simulation &) = delete;

    // -- observers ----------------------------------------------------------

    const RankLayout &layout() const noexcept { return layout_; }
    const RunConfig &config() const noexcept { return cfg_; }
    const Circuit &circuit() const noexcept { return circuit_; }
    const LadderState &ladder() const noexcept { return ladder_; }
    const FidelityLedger &ledger() const noexcept { return ledger_; }
    std::uint64_t next_gate() const noexcept { return next_gate_; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    BlockStore &store(std::uint32_t rank) { return *stores_.at(rank); }
    const BlockStore &store(std::uint32_t rank) const { return *stores_.at(rank); }
    const BlockCache *cache(std::uint32_t rank) const {
        return caches_.empty() ? nullptr : caches_.at(rank).get();
    }

    /// MSB-first rendering of a basis state, qubit `qubits-1` leftmost.
    static std::string bitstring(std::uint64_t value, unsigned qubits) {
        std::string s(qubits, '0');
        for (unsigned q = 0; q < qubits; ++q) {
            if ((value >> q) & 1) {
                s[qubits - 1 - q] = '1';
            }
        }
        return s;
    }

    // -- execution ----------------------------------------------------------

    /// Applies every remaining gate and reports. Resumable: a second call
    /// after an earlier partial run continues where it stopped.
    SimulationReport run() {
        if (running_) {
            throw ContractViolation("run: simulation is already running");
        }
        ensure_unpinned("run");

        const std::uint64_t start_gate = next_gate_;
        const unsigned workers = worker_count();
        run_stats_ = GateStats{};
        max_total_compressed_ = total_compressed_bytes();
        rank_level_.assign(layout_.ranks(), ladder_.index);
        worker_stats_.assign(workers, GateStats{});
        mailboxes_.clear();
        mailboxes_.resize(layout_.ranks());
        pending_level_.store(ladder_.index, std::memory_order_relaxed);
        stop_.store(false, std::memory_order_relaxed);
        first_error_ = nullptr;
        run_done_ = next_gate_ >= circuit_.gates.size();
        running_ = true;

        const auto wall_start = std::chrono::steady_clock::now();
        if (!run_done_) {
            run_gate_loop(workers);
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
        running_ = false;

        if (first_error_) {
            // A gate was abandoned mid-flight; drop its scratch and restore
            // bound coherence so the state stays inspectable.
            pending_escalations_.clear();
            for (auto &s : stores_) {
                s->abandon_scratch();
                s->set_bound(ladder_.bound());
            }
            std::rethrow_exception(std::exchange(first_error_, nullptr));
        }
        return build_report(start_gate, workers, wall);
    }

    // -- state access -------------------------------------------------------

    /// Visits every block in rank-major order with its decompressed
    /// amplitudes. The span is valid only during the call.
    void for_each_block(
        const std::function<void(std::uint32_t rank, std::uint64_t block, std::span<const Amplitude>)> &fn) {
        ensure_unpinned("for_each_block");
        for (std::uint32_t rank = 0; rank < layout_.ranks(); ++rank) {
            for (std::uint64_t k = 0; k < layout_.blocks_per_rank(); ++k) {
                const std::span<const Amplitude> amps = stores_[rank]->fetch(k);
                fn(rank, k, amps);
                stores_[rank]->release(k);
            }
        }
    }

    /// The whole state as a dense vector, for small systems only.
    std::vector<Amplitude> extract_state() {
        if (layout_.qubits() > 26) {
            throw ArgumentError("extract_state: refusing to materialize more than 2^26 amplitudes");
        }
        std::vector<Amplitude> state(layout_.total_amplitudes());
        for_each_block([&](std::uint32_t rank, std::uint64_t block, std::span<const Amplitude> amps) {
            const std::uint64_t base = recompose_index({rank, block, 0}, layout_);
            std::copy(amps.begin(), amps.end(), state.begin() + static_cast<std::ptrdiff_t>(base));
        });
        return state;
    }

    /**
     * Draws basis-state indices from the state's probability distribution
     * without materializing it: one decompression sweep to get per-block
     * masses, then one fetch per block that received draws. Total mass
     * normalizes the distribution, so lossy states need no renormalization
     * pass. Deterministic for a fixed seed.
     */
    std::vector<std::uint64_t> sample(std::uint64_t shots, std::uint64_t seed) {
        ensure_unpinned("sample");
        if (shots == 0) {
            return {};
        }
        const std::uint64_t total_blocks = layout_.ranks() * layout_.blocks_per_rank();

        // Pass one: cumulative block masses. The per-amplitude summation
        // order here must match pass two exactly.
        std::vector<double> prefix(total_blocks + 1, 0.0);
        {
            std::uint64_t slot = 0;
            for (std::uint32_t rank = 0; rank < layout_.ranks(); ++rank) {
                for (std::uint64_t k = 0; k < layout_.blocks_per_rank(); ++k, ++slot) {
                    const std::span<const Amplitude> amps = stores_[rank]->fetch(k);
                    double acc = prefix[slot];
                    for (const Amplitude &a : amps) {
                        acc += std::norm(a);
                    }
                    prefix[slot + 1] = acc;
                    stores_[rank]->release(k);
                }
            }
        }
        const double total_mass = prefix.back();
        if (!(total_mass > 0.0)) {
            throw ContractViolation("sample: state carries no probability mass");
        }

        std::mt19937_64 rng(seed);
        struct Draw {
            double u;
            std::uint64_t shot;
        };
        std::vector<Draw> draws(shots);
        for (std::uint64_t i = 0; i < shots; ++i) {
            // Explicit 53-bit mapping so the draw sequence is identical on
            // every platform for a given seed.
            const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            draws[i] = {unit * total_mass, i};
        }
        std::sort(draws.begin(), draws.end(), [](const Draw &a, const Draw &b) { return a.u < b.u; });

        std::vector<std::uint64_t> outcomes(shots);
        std::size_t i = 0;
        for (std::uint64_t slot = 0; slot < total_blocks && i < draws.size(); ++slot) {
            if (draws[i].u >= prefix[slot + 1]) {
                continue;
            }
            const std::uint32_t rank = static_cast<std::uint32_t>(slot / layout_.blocks_per_rank());
            const std::uint64_t k = slot % layout_.blocks_per_rank();
            const std::span<const Amplitude> amps = stores_[rank]->fetch(k);
            std::uint64_t off = 0;
            double acc = prefix[slot] + std::norm(amps[0]);
            while (i < draws.size() && draws[i].u < prefix[slot + 1]) {
                while (draws[i].u >= acc && off + 1 < amps.size()) {
                    ++off;
                    acc += std::norm(amps[off]);
                }
                outcomes[draws[i].shot] = recompose_index({rank, k, off}, layout_);
                ++i;
            }
            stores_[rank]->release(k);
        }
        return outcomes;
    }

    // -- snapshots ----------------------------------------------------------

    CheckpointData snapshot() const {
        ensure_unpinned("snapshot");
        CheckpointData data;
        data.qubits = layout_.qubits();
        data.ranks = layout_.ranks();
        data.blocks_per_rank = layout_.blocks_per_rank();
        data.next_gate = next_gate_;
        data.ladder_index = static_cast<std::uint32_t>(ladder_.index);
        data.ladder_forced = ladder_.forced;
        for (const LadderState::Escalation &e : ladder_.history) {
            data.escalations.emplace_back(e.gate_index, static_cast<std::uint32_t>(e.level));
        }
        data.gate_deltas = ledger_.deltas();
        data.codec = cfg_.codec;
        data.fingerprint = fingerprint_;
        data.blocks.resize(layout_.ranks());
        for (std::uint32_t rank = 0; rank < layout_.ranks(); ++rank) {
            data.blocks[rank].reserve(layout_.blocks_per_rank());
            for (std::uint64_t k = 0; k < layout_.blocks_per_rank(); ++k) {
                data.blocks[rank].push_back(stores_[rank]->block(k));
            }
        }
        return data;
    }

    void save_checkpoint(const std::string &path) const { save_checkpoint_file(path, snapshot()); }

  private:
    Simulation(RunConfig config, Circuit circuit, const CheckpointData *resume)
        : cfg_(std::move(config)), circuit_(std::move(circuit)),
          layout_(cfg_.qubits, cfg_.ranks, cfg_.blocks_per_rank) {
        circuit_.validate();
        if (circuit_.qubits != cfg_.qubits) {
            throw ConfigError("circuit spans " + std::to_string(circuit_.qubits) +
                              " qubits but the layout was configured for " + std::to_string(cfg_.qubits));
        }
        if (cfg_.forced_level) {
            if (*cfg_.forced_level < 0 || *cfg_.forced_level >= LadderState::level_count()) {
                throw ConfigError("pinned ladder level " + std::to_string(*cfg_.forced_level) +
                                  " out of range");
            }
            ladder_.index = *cfg_.forced_level;
            ladder_.forced = true;
        }
        if (cfg_.codec == CodecVariant::LosslessOnly &&
            (cfg_.budget_bytes != 0 || (cfg_.forced_level && *cfg_.forced_level != 0))) {
            throw ConfigError("the lossless-only codec cannot honor a lossy ladder level or a budget");
        }
        if (cfg_.budget_bytes != 0) {
            const std::uint64_t scratch_floor =
                static_cast<std::uint64_t>(layout_.ranks()) * layout_.scratch_bytes_per_rank();
            if (cfg_.budget_bytes <= scratch_floor) {
                throw ConfigError("budget of " + std::to_string(cfg_.budget_bytes) +
                                  " bytes does not cover the scratch floor of " +
                                  std::to_string(scratch_floor) + " bytes");
            }
            budget_per_rank_ = cfg_.budget_bytes / layout_.ranks();
        }
        fingerprint_ = circuit_fingerprint(circuit_);
        if (resume) {
            validate_resume(*resume);
            ladder_.index = static_cast<int>(resume->ladder_index);
            ladder_.forced = resume->ladder_forced;
            for (const auto &[gate, level] : resume->escalations) {
                ladder_.history.push_back({gate, static_cast<int>(level)});
            }
            ledger_.restore(resume->gate_deltas);
            next_gate_ = resume->next_gate;
        }

        stores_.reserve(layout_.ranks());
        if (cfg_.cache_enabled) {
            caches_.reserve(layout_.ranks());
        }
        for (std::uint32_t rank = 0; rank < layout_.ranks(); ++rank) {
            stores_.push_back(std::make_unique<BlockStore>(layout_, rank, cfg_.codec, ladder_.bound()));
            if (cfg_.cache_enabled) {
                caches_.push_back(std::make_unique<BlockCache>());
            }
            stores_.back()->on_store = [this, rank](std::uint32_t r, std::uint64_t block,
                                                    std::span<const Amplitude> values,
                                                    const CompressedBlock &cb) {
                after_store(rank);
                if (cfg_.hooks.on_store) {
                    cfg_.hooks.on_store(r, block, values, cb);
                }
            };
        }
        if (resume) {
            for (std::uint32_t rank = 0; rank < layout_.ranks(); ++rank) {
                for (std::uint64_t k = 0; k < layout_.blocks_per_rank(); ++k) {
                    stores_[rank]->install(k, resume->blocks[rank][k]);
                }
            }
        }
    }

    void validate_resume(const CheckpointData &d) const {
        if (d.qubits != cfg_.qubits || d.ranks != cfg_.ranks ||
            d.blocks_per_rank != cfg_.blocks_per_rank) {
            throw ConfigError("checkpoint layout (" + std::to_string(d.qubits) + " qubits, " +
                              std::to_string(d.ranks) + " ranks, " + std::to_string(d.blocks_per_rank) +
                              " blocks/rank) does not match the configuration (" +
                              std::to_string(cfg_.qubits) + ", " + std::to_string(cfg_.ranks) + ", " +
                              std::to_string(cfg_.blocks_per_rank) + ")");
        }
        if (d.codec != cfg_.codec) {
            throw ConfigError("checkpoint was written with codec " + std::string(to_string(d.codec)) +
                              " but " + std::string(to_string(cfg_.codec)) + " was requested");
        }
        if (d.fingerprint != fingerprint_) {
            throw ConfigError("checkpoint belongs to a different circuit");
        }
        if (d.next_gate > circuit_.gates.size()) {
            throw CorruptionError("checkpoint gate cursor is past the end of the circuit");
        }
        if (d.ladder_index >= static_cast<std::uint32_t>(LadderState::level_count())) {
            throw CorruptionError("checkpoint ladder index out of range");
        }
        for (const auto &[gate, level] : d.escalations) {
            if (level == 0 || level >= static_cast<std::uint32_t>(LadderState::level_count())) {
                throw CorruptionError("checkpoint escalation log names an invalid level");
            }
        }
        if (d.gate_deltas.size() != d.next_gate) {
            throw CorruptionError("checkpoint ledger length disagrees with its gate cursor");
        }
        if (cfg_.forced_level &&
            (!d.ladder_forced || static_cast<std::uint32_t>(*cfg_.forced_level) != d.ladder_index)) {
            throw ConfigError("pinned ladder level disagrees with the checkpoint");
        }
    }

    // -- gate loop ----------------------------------------------------------

    unsigned worker_count() const noexcept {
        const unsigned ranks = layout_.ranks();
        if (cfg_.threads == 0) {
            return ranks;
        }
        return std::min(ranks, std::max(1u, cfg_.threads));
    }

    BlockCache *cache_ptr(std::uint32_t rank) noexcept {
        return caches_.empty() ? nullptr : caches_[rank].get();
    }

    void run_gate_loop(unsigned workers) {
        std::barrier phase_barrier(static_cast<std::ptrdiff_t>(workers));
        std::barrier gate_barrier(static_cast<std::ptrdiff_t>(workers),
                                  [this]() noexcept { finalize_gate(); });

        auto worker = [&](unsigned w) {
            const std::uint32_t r_begin = static_cast<std::uint32_t>(
                static_cast<std::uint64_t>(layout_.ranks()) * w / workers);
            const std::uint32_t r_end = static_cast<std::uint32_t>(
                static_cast<std::uint64_t>(layout_.ranks()) * (w + 1) / workers);
            while (!run_done_) {
                const Gate &gate = circuit_.gates[next_gate_];
                const GatePlan plan = plan_gate(gate, layout_);
                // Phase one: adopt the published ladder level, then post
                // serialized blocks to cross-rank partners.
                if (!stop_.load(std::memory_order_relaxed)) {
                    try {
                        for (std::uint32_t rank = r_begin; rank < r_end; ++rank) {
                            rank_level_[rank] = ladder_.index;
                            stores_[rank]->set_bound(LadderState::bound_for(ladder_.index));
                        }
                        if (plan.locality == QubitLocality::CrossRank) {
                            for (std::uint32_t rank = r_begin; rank < r_end; ++rank) {
                                GateExecutor ex(*stores_[rank], cache_ptr(rank));
                                auto out = ex.collect_outgoing(plan, worker_stats_[w]);
                                auto &box = mailboxes_[plan.partner_rank(rank)];
                                detail::ScopedTimer timer(worker_stats_[w].comm_ns);
                                for (auto &ob : out) {
                                    box.emplace(ob.block_id, std::move(ob.bytes));
                                }
                            }
                        }
                    } catch (...) {
                        record_failure();
                    }
                }
                phase_barrier.arrive_and_wait();
                // Phase two: apply the gate on every owned rank.
                if (!stop_.load(std::memory_order_relaxed)) {
                    try {
                        for (std::uint32_t rank = r_begin; rank < r_end; ++rank) {
                            GateExecutor ex(*stores_[rank], cache_ptr(rank));
                            if (plan.locality == QubitLocality::CrossRank) {
                                auto take = [this, rank](std::uint64_t block) {
                                    auto &box = mailboxes_[rank];
                                    auto it = box.find(block);
                                    if (it == box.end()) {
                                        throw ExchangeError("rank " + std::to_string(rank) +
                                                            ": partner block " + std::to_string(block) +
                                                            " never arrived");
                                    }
                                    std::vector<std::uint8_t> bytes = std::move(it->second);
                                    box.erase(it);
                                    return bytes;
                                };
                                worker_stats_[w] += ex.run_cross_rank(gate, plan, take);
                            } else {
                                worker_stats_[w] += ex.run_local(gate, plan);
                            }
                        }
                    } catch (...) {
                        record_failure();
                    }
                }
                gate_barrier.arrive_and_wait();
            }
        };

        if (workers == 1) {
            worker(0);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers - 1);
            for (unsigned w = 1; w < workers; ++w) {
                pool.emplace_back(worker, w);
            }
            worker(0);
        }
    }

    /// Runs once per gate as the barrier completion, all workers parked.
    void finalize_gate() noexcept {
        try {
            if (stop_.load(std::memory_order_relaxed)) {
                run_done_ = true;
                return;
            }
            int gate_level = ladder_.index;
            for (int lvl : rank_level_) {
                gate_level = std::max(gate_level, lvl);
            }
            ledger_.record(LadderState::kLevels[static_cast<std::size_t>(gate_level)]);

            const int pending = pending_level_.load(std::memory_order_relaxed);
            ladder_.index = std::max(ladder_.index, pending);
            if (!pending_escalations_.empty()) {
                // Several ranks can report the same step; the ladder climbed
                // each level exactly once, so keep one entry per level.
                std::sort(pending_escalations_.begin(), pending_escalations_.end(),
                          [](const LadderState::Escalation &a, const LadderState::Escalation &b) {
                              return a.level < b.level;
                          });
                for (const LadderState::Escalation &e : pending_escalations_) {
                    if (ladder_.history.empty() || ladder_.history.back().level < e.level) {
                        ladder_.history.push_back(e);
                    }
                }
                pending_escalations_.clear();
            }

            for (GateStats &ws : worker_stats_) {
                run_stats_ += ws;
                ws = GateStats{};
            }
            max_total_compressed_ = std::max(max_total_compressed_, total_compressed_bytes());
            for (const auto &box : mailboxes_) {
                if (!box.empty()) {
                    throw ExchangeError("blocks left undelivered after a cross-rank gate");
                }
            }

            ++next_gate_;
            if (cfg_.hooks.after_gate) {
                cfg_.hooks.after_gate(next_gate_ - 1, *this);
            }
            if (cfg_.checkpoint_every != 0 && !cfg_.checkpoint_path.empty() &&
                next_gate_ < circuit_.gates.size() && next_gate_ % cfg_.checkpoint_every == 0) {
                save_checkpoint(cfg_.checkpoint_path);
            }
            if (next_gate_ >= circuit_.gates.size()) {
                run_done_ = true;
            }
        } catch (...) {
            record_failure();
            run_done_ = true;
        }
    }

    /// Store hook tail on the owning rank's thread: budget check against
    /// this rank's share, escalating only this rank's bound right away. The
    /// published level is adopted by everyone at the gate barrier, keeping
    /// the outcome independent of thread count.
    void after_store(std::uint32_t rank) {
        if (budget_per_rank_ == 0) {
            return;
        }
        const std::uint64_t accounted = stores_[rank]->accounted_bytes();
        if (!running_) {
            if (escalate_if_needed(ladder_, accounted, budget_per_rank_, next_gate_)) {
                for (auto &s : stores_) {
                    s->set_bound(ladder_.bound());
                }
            }
            return;
        }
        if (!ladder_trigger(accounted, budget_per_rank_)) {
            return;
        }
        if (ladder_.forced) {
            throw ResourceExhaustedError(next_gate_,
                                         "compressed state exceeds the memory budget at the pinned accuracy level");
        }
        const int level = rank_level_[rank] + 1;
        if (level >= LadderState::level_count()) {
            throw ResourceExhaustedError(next_gate_,
                                         "compressed state exceeds the memory budget at the loosest accuracy level");
        }
        rank_level_[rank] = level;
        stores_[rank]->set_bound(LadderState::bound_for(level));
        int expected = pending_level_.load(std::memory_order_relaxed);
        while (expected < level &&
               !pending_level_.compare_exchange_weak(expected, level, std::memory_order_relaxed)) {
        }
        std::lock_guard<std::mutex> lock(meta_mu_);
        pending_escalations_.push_back({next_gate_, level});
    }

    void record_failure() noexcept {
        std::lock_guard<std::mutex> lock(meta_mu_);
        if (!first_error_) {
            first_error_ = std::current_exception();
        }
        stop_.store(true, std::memory_order_relaxed);
    }

    // -- reporting ----------------------------------------------------------

    std::uint64_t total_compressed_bytes() const noexcept {
        std::uint64_t total = 0;
        for (const auto &s : stores_) {
            total += s->compressed_bytes();
        }
        return total;
    }

    SimulationReport build_report(std::uint64_t start_gate, unsigned workers, double wall) const {
        SimulationReport rep;
        rep.qubits = layout_.qubits();
        rep.ranks = layout_.ranks();
        rep.blocks_per_rank = layout_.blocks_per_rank();
        rep.block_len = layout_.block_len();
        rep.worker_threads = workers;
        rep.gate_count = circuit_.gates.size();
        rep.executed_gates = next_gate_ - start_gate;
        rep.fidelity_lower_bound = ledger_.lower_bound();
        rep.wall_seconds = wall;
        rep.seconds_per_gate =
            rep.executed_gates != 0 ? wall / static_cast<double>(rep.executed_gates) : 0.0;
        const double worker_seconds = wall * static_cast<double>(workers);
        const auto share = [worker_seconds](std::uint64_t ns) {
            return worker_seconds > 0.0 ? static_cast<double>(ns) * 1e-9 / worker_seconds * 100.0 : 0.0;
        };
        rep.compression_share = share(run_stats_.compress_ns);
        rep.decompression_share = share(run_stats_.decompress_ns);
        rep.communication_share = share(run_stats_.comm_ns);
        rep.computation_share = share(run_stats_.compute_ns);
        rep.max_compressed_bytes = max_total_compressed_;
        rep.min_compression_ratio =
            max_total_compressed_ != 0
                ? static_cast<double>(layout_.raw_state_bytes()) / static_cast<double>(max_total_compressed_)
                : 0.0;
        for (const auto &s : stores_) {
            rep.peak_accounted_bytes += s->peak_accounted_bytes();
            rep.final_accounted_bytes += s->accounted_bytes();
        }
        rep.budget_bytes = cfg_.budget_bytes;
        rep.final_ladder_index = ladder_.index;
        rep.ladder_forced = ladder_.forced;
        rep.escalations = ladder_.history;
        rep.cache_enabled = cfg_.cache_enabled;
        rep.cache_lookups = run_stats_.cache_lookups;
        rep.cache_hits = run_stats_.cache_hits;
        for (const auto &c : caches_) {
            if (c && !c->enabled()) {
                ++rep.caches_disabled;
            }
        }
        rep.pair_updates = run_stats_.pair_updates;
        rep.blocks_processed = run_stats_.blocks_processed;
        rep.blocks_skipped = run_stats_.blocks_skipped;
        rep.exchanges = run_stats_.exchanges_received;
        rep.exchanged_bytes = run_stats_.exchanged_bytes;
        return rep;
    }

    void ensure_unpinned(const char *op) const {
        for (const auto &s : stores_) {
            if (s->pinned_slots() != 0) {
                throw ContractViolation(std::string(op) + ": scratch slots are still pinned");
            }
        }
    }

    // -- members ------------------------------------------------------------

    RunConfig cfg_;
    Circuit circuit_;
    RankLayout layout_;
    std::vector<std::unique_ptr<BlockStore>> stores_;
    std::vector<std::unique_ptr<BlockCache>> caches_;
    LadderState ladder_;
    FidelityLedger ledger_;
    std::uint64_t next_gate_ = 0;
    std::uint64_t budget_per_rank_ = 0; ///< 0 = unlimited
    std::uint64_t fingerprint_ = 0;

    // Valid while run() is active.
    bool running_ = false;
    bool run_done_ = false;
    std::atomic<bool> stop_{false};
    std::atomic<int> pending_level_{0};
    std::vector<int> rank_level_;
    std::vector<GateStats> worker_stats_;
    std::vector<std::map<std::uint64_t, std::vector<std::uint8_t>>> mailboxes_;
    std::vector<LadderState::Escalation> pending_escalations_;
    std::mutex meta_mu_;
    std::exception_ptr first_error_;
    GateStats run_stats_;
    std::uint64_t max_total_compressed_ = 0;
};

} // namespace qcsim
