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
 * @file circuits.hpp
 * @brief Benchmark circuit generators and the circuit text format.
 *
 * Text format: one gate per line, `NAME target [control...] [param]`, with
 * `#` starting a comment and blank lines ignored. Qubit 0 is the least
 * significant bit of the state index. Parameters print with 17 significant
 * digits so parse(render(c)) reproduces c exactly.
 *
 * Vocabulary: H X Y Z S T SX SY (one qubit), RX RY RZ (one qubit, angle),
 * CX CZ (target, control), CP (target, control, angle), CCX (target, two
 * controls), MCX (target, three or more controls).
 */

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qcsim/gates.hpp"

namespace qcsim {

// ---------------------------------------------------------------------------
// Deterministic draws. The standard distributions are implementation
// defined, so generators use explicit arithmetic on raw engine output and
// produce the same circuit for the same seed everywhere.
// ---------------------------------------------------------------------------

namespace detail {

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n). Modulo bias is irrelevant at benchmark scales and
    /// the mapping is portable.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    /// Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

template <typename T> void shuffle(std::vector<T> &v, SplitMix64 &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Generators.
// ---------------------------------------------------------------------------

/**
 * Amplitude-amplification search over qubits 0..n-2 with qubit n-1 as the
 * phase ancilla. The oracle marks `marked` (an (n-1)-bit string) by a
 * multi-controlled X onto the ancilla held in |->; the diffusion operator
 * reflects the register about its mean.
 *
 * `iterations` = 0 picks floor(pi/4 * sqrt(2^(n-1))), at least 1, which
 * maximizes the success probability for small registers.
 */
inline Circuit grover(unsigned qubits, std::uint64_t marked, unsigned iterations = 0) {
    if (qubits < 3) {
        throw ArgumentError("grover: need at least 3 qubits (2 search + 1 ancilla)");
    }
    const unsigned m = qubits - 1;
    if (m < 64 && marked >= (std::uint64_t{1} << m)) {
        throw ArgumentError("grover: marked string needs more than " + std::to_string(m) + " bits");
    }
    if (iterations == 0) {
        iterations = static_cast<unsigned>(
            std::floor(std::numbers::pi / 4.0 * std::sqrt(std::ldexp(1.0, static_cast<int>(m)))));
        iterations = std::max(iterations, 1u);
    }
    const unsigned anc = qubits - 1;

    Circuit c;
    c.qubits = qubits;
    auto controlled_x = [&](unsigned target, std::vector<unsigned> controls) {
        if (controls.size() == 1) {
            c.gates.push_back(gates::cx(target, controls[0]));
        } else {
            c.gates.push_back(gates::mcx(target, std::move(controls)));
        }
    };
    std::vector<unsigned> all_register(m);
    for (unsigned q = 0; q < m; ++q) {
        all_register[q] = q;
    }

    c.gates.push_back(gates::x(anc));
    c.gates.push_back(gates::h(anc));
    for (unsigned q = 0; q < m; ++q) {
        c.gates.push_back(gates::h(q));
    }
    for (unsigned it = 0; it < iterations; ++it) {
        // Oracle: phase-flip the marked string via the |-> ancilla.
        for (unsigned q = 0; q < m; ++q) {
            if (((marked >> q) & 1) == 0) {
                c.gates.push_back(gates::x(q));
            }
        }
        controlled_x(anc, all_register);
        for (unsigned q = 0; q < m; ++q) {
            if (((marked >> q) & 1) == 0) {
                c.gates.push_back(gates::x(q));
            }
        }
        // Diffusion: H X (controlled-Z over the register) X H.
        for (unsigned q = 0; q < m; ++q) {
            c.gates.push_back(gates::h(q));
        }
        for (unsigned q = 0; q < m; ++q) {
            c.gates.push_back(gates::x(q));
        }
        c.gates.push_back(gates::h(m - 1));
        std::vector<unsigned> lower(all_register.begin(), all_register.end() - 1);
        controlled_x(m - 1, std::move(lower));
        c.gates.push_back(gates::h(m - 1));
        for (unsigned q = 0; q < m; ++q) {
            c.gates.push_back(gates::x(q));
        }
        for (unsigned q = 0; q < m; ++q) {
            c.gates.push_back(gates::h(q));
        }
    }
    return c;
}

/**
 * Quantum Fourier transform over all n qubits: Hadamards with cascading
 * controlled phases, then the qubit-order reversal as CX triples. Matches
 * the DFT matrix with e^{+2 pi i / 2^n} convention.
 */
inline Circuit qft(unsigned qubits) {
    if (qubits == 0) {
        throw ArgumentError("qft: need at least 1 qubit");
    }
    Circuit c;
    c.qubits = qubits;
    for (unsigned i = qubits; i-- > 0;) {
        c.gates.push_back(gates::h(i));
        for (unsigned j = i; j-- > 0;) {
            const double theta = std::ldexp(std::numbers::pi, -static_cast<int>(i - j));
            c.gates.push_back(gates::cp(i, j, theta));
        }
    }
    for (unsigned i = 0; i < qubits / 2; ++i) {
        const unsigned j = qubits - 1 - i;
        c.gates.push_back(gates::cx(i, j));
        c.gates.push_back(gates::cx(j, i));
        c.gates.push_back(gates::cx(i, j));
    }
    return c;
}

/**
 * One MaxCut ansatz over a seeded random 4-regular graph: per round, a
 * ZZ-phase (CX RZ CX) on every edge then an RX mixer on every qubit. Angles
 * are drawn per round from the same seed stream as the graph.
 */
inline Circuit qaoa_maxcut(unsigned qubits, unsigned rounds, std::uint64_t seed) {
    constexpr unsigned kDegree = 4;
    if (qubits <= kDegree) {
        throw ArgumentError("qaoa_maxcut: a 4-regular graph needs at least " +
                            std::to_string(kDegree + 1) + " vertices");
    }
    if (rounds == 0) {
        throw ArgumentError("qaoa_maxcut: need at least one round");
    }
    detail::SplitMix64 rng(seed ^ 0x9a0a5eed);

    // 4-regular simple graph by repeated stub pairing.
    std::vector<std::pair<unsigned, unsigned>> edges;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<unsigned> stubs;
        stubs.reserve(qubits * kDegree);
        for (unsigned v = 0; v < qubits; ++v) {
            for (unsigned d = 0; d < kDegree; ++d) {
                stubs.push_back(v);
            }
        }
        detail::shuffle(stubs, rng);
        edges.clear();
        bool simple = true;
        std::vector<std::vector<bool>> seen(qubits, std::vector<bool>(qubits, false));
        for (std::size_t i = 0; i + 1 < stubs.size() && simple; i += 2) {
            const unsigned u = stubs[i];
            const unsigned v = stubs[i + 1];
            if (u == v || seen[u][v]) {
                simple = false;
                break;
            }
            seen[u][v] = seen[v][u] = true;
            edges.emplace_back(u, v);
        }
        if (simple) {
            break;
        }
        edges.clear();
    }
    if (edges.empty()) {
        throw ArgumentError("qaoa_maxcut: failed to build a simple 4-regular graph for this seed");
    }

    Circuit c;
    c.qubits = qubits;
    for (unsigned q = 0; q < qubits; ++q) {
        c.gates.push_back(gates::h(q));
    }
    for (unsigned round = 0; round < rounds; ++round) {
        const double gamma = std::numbers::pi * rng.unit();
        const double beta = std::numbers::pi * rng.unit() / 2.0;
        for (const auto &[u, v] : edges) {
            c.gates.push_back(gates::cx(v, u));
            c.gates.push_back(gates::rz(v, 2.0 * gamma));
            c.gates.push_back(gates::cx(v, u));
        }
        for (unsigned q = 0; q < qubits; ++q) {
            c.gates.push_back(gates::rx(q, 2.0 * beta));
        }
    }
    return c;
}

/**
 * Hard-sampling circuit on a rows x cols grid (qubit = row * cols + col):
 * a Hadamard layer, then `depth` cycles that alternate four CZ grid
 * patterns (horizontal even/odd columns, vertical even/odd rows) with
 * sparse single-qubit gates.
 *
 * Single-qubit placement follows the classic recipe: a qubit gets one only
 * in a cycle where it is idle after participating in a CZ the cycle
 * before; the first is always T, later ones are drawn from {SX, SY, T}
 * never repeating the previous choice. The sparseness is structural: most
 * qubits keep their amplitudes' byte-level regularity for many cycles.
 */
inline Circuit random_sampling_circuit(unsigned rows, unsigned cols, unsigned depth,
                                       std::uint64_t seed) {
    if (rows == 0 || cols == 0 || rows * cols < 2) {
        throw ArgumentError("random_sampling_circuit: grid must contain at least 2 qubits");
    }
    const unsigned n = rows * cols;
    detail::SplitMix64 rng(seed ^ 0x5eedc1c1);

    Circuit c;
    c.qubits = n;
    for (unsigned q = 0; q < n; ++q) {
        c.gates.push_back(gates::h(q));
    }

    enum class Single : std::uint8_t { None, SX, SY, T };
    std::vector<Single> last_single(n, Single::None);
    std::vector<bool> in_cz_prev(n, false);

    auto qubit_at = [cols](unsigned r, unsigned col) { return r * cols + col; };

    for (unsigned cycle = 0; cycle < depth; ++cycle) {
        std::vector<std::pair<unsigned, unsigned>> pairs;
        switch (cycle % 4) {
        case 0: // horizontal, even columns
            for (unsigned r = 0; r < rows; ++r) {
                for (unsigned col = 0; col + 1 < cols; col += 2) {
                    pairs.emplace_back(qubit_at(r, col), qubit_at(r, col + 1));
                }
            }
            break;
        case 1: // horizontal, odd columns
            for (unsigned r = 0; r < rows; ++r) {
                for (unsigned col = 1; col + 1 < cols; col += 2) {
                    pairs.emplace_back(qubit_at(r, col), qubit_at(r, col + 1));
                }
            }
            break;
        case 2: // vertical, even rows
            for (unsigned r = 0; r + 1 < rows; r += 2) {
                for (unsigned col = 0; col < cols; ++col) {
                    pairs.emplace_back(qubit_at(r, col), qubit_at(r + 1, col));
                }
            }
            break;
        default: // vertical, odd rows
            for (unsigned r = 1; r + 1 < rows; r += 2) {
                for (unsigned col = 0; col < cols; ++col) {
                    pairs.emplace_back(qubit_at(r, col), qubit_at(r + 1, col));
                }
            }
            break;
        }

        std::vector<bool> in_cz_now(n, false);
        for (const auto &[a, b] : pairs) {
            in_cz_now[a] = in_cz_now[b] = true;
        }
        // Singles before this cycle's CZ layer, on qubits resting after a CZ.
        for (unsigned q = 0; q < n; ++q) {
            if (in_cz_now[q] || !in_cz_prev[q]) {
                continue;
            }
            Single pick;
            if (last_single[q] == Single::None) {
                pick = Single::T;
            } else {
                const Single options[3] = {Single::SX, Single::SY, Single::T};
                Single choice = options[rng.below(3)];
                while (choice == last_single[q]) {
                    choice = options[rng.below(3)];
                }
                pick = choice;
            }
            last_single[q] = pick;
            switch (pick) {
            case Single::SX:
                c.gates.push_back(gates::sx(q));
                break;
            case Single::SY:
                c.gates.push_back(gates::sy(q));
                break;
            default:
                c.gates.push_back(gates::t(q));
                break;
            }
        }
        for (const auto &[a, b] : pairs) {
            c.gates.push_back(gates::cz(b, a));
        }
        in_cz_prev = in_cz_now;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Text format.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string render_angle(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline unsigned parse_qubit(const std::string &token, unsigned qubits, std::size_t line) {
    char *end = nullptr;
    errno = 0;
    const unsigned long v = std::strtoul(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0' || errno == ERANGE || token[0] == '-') {
        throw ParseError(line, "expected a qubit index, got '" + token + "'");
    }
    if (v >= qubits) {
        throw ParseError(line, "qubit " + token + " out of range for " + std::to_string(qubits) +
                                   " qubits");
    }
    return static_cast<unsigned>(v);
}

inline double parse_angle(const std::string &token, std::size_t line) {
    char *end = nullptr;
    errno = 0;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        throw ParseError(line, "expected an angle, got '" + token + "'");
    }
    return v;
}

} // namespace detail

/// One line per gate, in the vocabulary above.
inline std::string render(const Circuit &circuit) {
    std::string out;
    for (const Gate &g : circuit.gates) {
        out += g.name;
        out += ' ';
        out += std::to_string(g.target);
        for (unsigned c : g.controls) {
            out += ' ';
            out += std::to_string(c);
        }
        for (double p : g.params) {
            out += ' ';
            out += detail::render_angle(p);
        }
        out += '\n';
    }
    return out;
}

/// Parses circuit text over `qubits` qubits. Any malformed line throws a
/// ParseError carrying its 1-based line number.
inline Circuit parse_circuit(const std::string &text, unsigned qubits) {
    if (qubits == 0) {
        throw ArgumentError("parse_circuit: qubit count must be positive");
    }
    Circuit circuit;
    circuit.qubits = qubits;
    std::istringstream stream(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) {
            raw.resize(hash);
        }
        std::istringstream line(raw);
        std::string name;
        if (!(line >> name)) {
            continue; // blank or comment-only
        }
        std::vector<std::string> args;
        std::string tok;
        while (line >> tok) {
            args.push_back(tok);
        }
        auto need = [&](std::size_t count) {
            if (args.size() != count) {
                throw ParseError(line_no, name + " takes " + std::to_string(count) +
                                              " argument(s), got " + std::to_string(args.size()));
            }
        };
        auto qubit = [&](std::size_t i) { return detail::parse_qubit(args[i], qubits, line_no); };
        try {
            if (name == "H" || name == "X" || name == "Y" || name == "Z" || name == "S" ||
                name == "T" || name == "SX" || name == "SY") {
                need(1);
                const unsigned t = qubit(0);
                if (name == "H") {
                    circuit.gates.push_back(gates::h(t));
                } else if (name == "X") {
                    circuit.gates.push_back(gates::x(t));
                } else if (name == "Y") {
                    circuit.gates.push_back(gates::y(t));
                } else if (name == "Z") {
                    circuit.gates.push_back(gates::z(t));
                } else if (name == "S") {
                    circuit.gates.push_back(gates::s(t));
                } else if (name == "T") {
                    circuit.gates.push_back(gates::t(t));
                } else if (name == "SX") {
                    circuit.gates.push_back(gates::sx(t));
                } else {
                    circuit.gates.push_back(gates::sy(t));
                }
            } else if (name == "RX" || name == "RY" || name == "RZ") {
                need(2);
                const unsigned t = qubit(0);
                const double theta = detail::parse_angle(args[1], line_no);
                if (name == "RX") {
                    circuit.gates.push_back(gates::rx(t, theta));
                } else if (name == "RY") {
                    circuit.gates.push_back(gates::ry(t, theta));
                } else {
                    circuit.gates.push_back(gates::rz(t, theta));
                }
            } else if (name == "CX" || name == "CZ") {
                need(2);
                const unsigned t = qubit(0);
                const unsigned ctrl = qubit(1);
                circuit.gates.push_back(name == "CX" ? gates::cx(t, ctrl) : gates::cz(t, ctrl));
            } else if (name == "CP") {
                need(3);
                circuit.gates.push_back(
                    gates::cp(qubit(0), qubit(1), detail::parse_angle(args[2], line_no)));
            } else if (name == "CCX") {
                need(3);
                circuit.gates.push_back(gates::ccx(qubit(0), qubit(1), qubit(2)));
            } else if (name == "MCX") {
                if (args.size() < 3) {
                    throw ParseError(line_no, "MCX takes a target and at least 2 controls");
                }
                const unsigned t = qubit(0);
                std::vector<unsigned> controls;
                for (std::size_t i = 1; i < args.size(); ++i) {
                    controls.push_back(qubit(i));
                }
                circuit.gates.push_back(gates::mcx(t, std::move(controls)));
            } else {
                throw ParseError(line_no, "unknown gate '" + name + "'");
            }
        } catch (const ArgumentError &e) {
            throw ParseError(line_no, e.what());
        }
    }
    return circuit;
}

} // namespace qcsim
