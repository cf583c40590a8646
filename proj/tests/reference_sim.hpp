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

// Test-only dense state-vector simulator. Holds the whole state in one flat
// array and applies gates by direct index arithmetic, sharing no code with
// the block engine. The pair update uses the same expression shape as the
// engine's apply_pair on purpose: both sides then round identically and
// lossless comparisons can demand bit equality.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qcsim/blockstore.hpp"
#include "qcsim/gates.hpp"
#include "qcsim/layout.hpp"

namespace qcsim_test {

class DenseSim {
  public:
    explicit DenseSim(unsigned qubits) : qubits_(qubits), amps_(std::uint64_t{1} << qubits) {
        amps_[0] = {1.0, 0.0};
    }

    explicit DenseSim(std::vector<qcsim::Amplitude> amps, unsigned qubits)
        : qubits_(qubits), amps_(std::move(amps)) {}

    void apply(const qcsim::Gate &g) {
        const std::uint64_t tbit = std::uint64_t{1} << g.target;
        std::uint64_t cmask = 0;
        for (unsigned c : g.controls) {
            cmask |= std::uint64_t{1} << c;
        }
        for (std::uint64_t i = 0; i < amps_.size(); ++i) {
            if ((i & tbit) == 0 && (i & cmask) == cmask) {
                const qcsim::Amplitude a0 = amps_[i];
                const qcsim::Amplitude a1 = amps_[i | tbit];
                const qcsim::Amplitude t0 = g.u[0] * a0 + g.u[1] * a1;
                const qcsim::Amplitude t1 = g.u[2] * a0 + g.u[3] * a1;
                amps_[i] = t0;
                amps_[i | tbit] = t1;
            }
        }
    }

    void run(const qcsim::Circuit &circuit) {
        for (const auto &g : circuit.gates) {
            apply(g);
        }
    }

    double norm_squared() const {
        double sum = 0.0;
        for (const auto &a : amps_) {
            sum += a.real() * a.real() + a.imag() * a.imag();
        }
        return sum;
    }

    double probability(std::uint64_t index) const {
        const auto &a = amps_.at(index);
        return a.real() * a.real() + a.imag() * a.imag();
    }

    /// Probability that the qubits below `bits` read `value`, marginalized
    /// over all higher qubits.
    double marginal_probability(unsigned bits, std::uint64_t value) const {
        double sum = 0.0;
        const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
        for (std::uint64_t i = 0; i < amps_.size(); ++i) {
            if ((i & mask) == value) {
                sum += probability(i);
            }
        }
        return sum;
    }

    unsigned qubits() const { return qubits_; }
    const std::vector<qcsim::Amplitude> &state() const { return amps_; }

  private:
    unsigned qubits_;
    std::vector<qcsim::Amplitude> amps_;
};

/// Reassembles the global state vector from a set of rank stores by sweeping
/// every block through a scratch slot.
inline std::vector<qcsim::Amplitude> gather_state(std::span<qcsim::BlockStore *const> stores) {
    const qcsim::RankLayout &layout = stores[0]->layout();
    std::vector<qcsim::Amplitude> out(layout.total_amplitudes());
    for (std::uint32_t rank = 0; rank < layout.ranks(); ++rank) {
        for (std::uint64_t block = 0; block < layout.blocks_per_rank(); ++block) {
            auto values = stores[rank]->fetch(block);
            for (std::uint64_t off = 0; off < values.size(); ++off) {
                out[qcsim::recompose_index({rank, block, off}, layout)] = values[off];
            }
            stores[rank]->release(block);
        }
    }
    return out;
}

/// Scatters a dense state into rank stores, compressing at each store's
/// current bound.
inline void scatter_state(std::span<qcsim::BlockStore *const> stores,
                          std::span<const qcsim::Amplitude> state) {
    const qcsim::RankLayout &layout = stores[0]->layout();
    for (std::uint32_t rank = 0; rank < layout.ranks(); ++rank) {
        for (std::uint64_t block = 0; block < layout.blocks_per_rank(); ++block) {
            auto values = stores[rank]->fetch(block);
            for (std::uint64_t off = 0; off < values.size(); ++off) {
                values[off] = state[qcsim::recompose_index({rank, block, off}, layout)];
            }
            stores[rank]->store(block, values);
        }
    }
}

inline bool bits_equal(const qcsim::Amplitude &a, const qcsim::Amplitude &b) {
    return std::bit_cast<std::uint64_t>(a.real()) == std::bit_cast<std::uint64_t>(b.real()) &&
           std::bit_cast<std::uint64_t>(a.imag()) == std::bit_cast<std::uint64_t>(b.imag());
}

} // namespace qcsim_test
