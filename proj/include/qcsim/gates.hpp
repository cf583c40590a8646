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
 * @file gates.hpp
 * @brief Gate and circuit value types plus the factory for every supported
 * gate. All gates reduce to one 2x2 unitary applied to a target qubit under
 * zero or more control qubits; the factories bake the matrix in so the
 * engine never special-cases by name.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qcsim/common.hpp"

namespace qcsim {

/// Row-major 2x2 complex matrix: {u00, u01, u10, u11}.
using GateMatrix = std::array<Amplitude, 4>;

enum class GateKind : std::uint8_t {
    SingleQubit,
    ControlledSingleQubit,
    MultiControlledX,
};

/// Max acceptable deviation of U†U from identity, in max-abs-entry norm.
inline constexpr double kUnitarityTolerance = 1e-12;

/// Largest entry of |U†U - I|. Zero for an exact unitary.
inline double unitarity_defect(const GateMatrix &u) {
    // Rows of U† are conjugated columns of U.
    const Amplitude c00 = std::conj(u[0]) * u[0] + std::conj(u[2]) * u[2];
    const Amplitude c01 = std::conj(u[0]) * u[1] + std::conj(u[2]) * u[3];
    const Amplitude c10 = std::conj(u[1]) * u[0] + std::conj(u[3]) * u[2];
    const Amplitude c11 = std::conj(u[1]) * u[1] + std::conj(u[3]) * u[3];
    double defect = std::abs(c00 - Amplitude{1.0, 0.0});
    defect = std::max(defect, std::abs(c01));
    defect = std::max(defect, std::abs(c10));
    defect = std::max(defect, std::abs(c11 - Amplitude{1.0, 0.0}));
    return defect;
}

/**
 * One gate: a named 2x2 unitary, its target qubit, and control qubits that
 * gate the update (all controls must read 1). `name` and `params` carry the
 * text-format identity so a parsed circuit renders back identically.
 */
struct Gate {
    GateKind kind = GateKind::SingleQubit;
    std::string name;
    GateMatrix u{};
    unsigned target = 0;
    std::vector<unsigned> controls;
    std::vector<double> params;

    friend bool operator==(const Gate &, const Gate &) = default;

    /// Stable byte image of everything that determines this gate's action on
    /// a block, used as part of result-cache keys.
    std::vector<std::uint8_t> descriptor_bytes() const {
        std::vector<std::uint8_t> out;
        put_u8(out, static_cast<std::uint8_t>(kind));
        for (const Amplitude &entry : u) {
            put_f64_be(out, entry.real());
            put_f64_be(out, entry.imag());
        }
        put_u32_be(out, target);
        put_u32_be(out, static_cast<std::uint32_t>(controls.size()));
        for (unsigned c : controls) {
            put_u32_be(out, c);
        }
        return out;
    }
};

namespace detail {

inline void check_distinct(unsigned target, const std::vector<unsigned> &controls) {
    for (std::size_t i = 0; i < controls.size(); ++i) {
        if (controls[i] == target) {
            throw ArgumentError("gate: control qubit " + std::to_string(controls[i]) +
                                " equals the target qubit");
        }
        for (std::size_t j = i + 1; j < controls.size(); ++j) {
            if (controls[i] == controls[j]) {
                throw ArgumentError("gate: duplicate control qubit " + std::to_string(controls[i]));
            }
        }
    }
}

inline Gate make_gate(GateKind kind, std::string name, const GateMatrix &u, unsigned target,
                      std::vector<unsigned> controls, std::vector<double> params) {
    const double defect = unitarity_defect(u);
    if (defect > kUnitarityTolerance) {
        throw ArgumentError("gate " + name + ": matrix is not unitary (defect " + std::to_string(defect) +
                            ")");
    }
    check_distinct(target, controls);
    Gate g;
    g.kind = kind;
    g.name = std::move(name);
    g.u = u;
    g.target = target;
    g.controls = std::move(controls);
    g.params = std::move(params);
    return g;
}

inline GateMatrix matrix_x() { return {Amplitude{0, 0}, Amplitude{1, 0}, Amplitude{1, 0}, Amplitude{0, 0}}; }

} // namespace detail

namespace gates {

inline Gate h(unsigned t) {
    const double s = 1.0 / std::numbers::sqrt2;
    return detail::make_gate(GateKind::SingleQubit, "H",
                             {Amplitude{s, 0}, Amplitude{s, 0}, Amplitude{s, 0}, Amplitude{-s, 0}}, t, {},
                             {});
}

inline Gate x(unsigned t) {
    return detail::make_gate(GateKind::SingleQubit, "X", detail::matrix_x(), t, {}, {});
}

inline Gate y(unsigned t) {
    return detail::make_gate(GateKind::SingleQubit, "Y",
                             {Amplitude{0, 0}, Amplitude{0, -1}, Amplitude{0, 1}, Amplitude{0, 0}}, t, {},
                             {});
}

inline Gate z(unsigned t) {
    return detail::make_gate(GateKind::SingleQubit, "Z",
                             {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{-1, 0}}, t, {},
                             {});
}

inline Gate s(unsigned t) {
    return detail::make_gate(GateKind::SingleQubit, "S",
                             {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{0, 1}}, t, {},
                             {});
}

inline Gate t(unsigned tq) {
    const double c = 1.0 / std::numbers::sqrt2;
    return detail::make_gate(GateKind::SingleQubit, "T",
                             {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{c, c}}, tq, {},
                             {});
}

/// Square root of X; repeated twice it gives X up to global phase.
inline Gate sx(unsigned t) {
    return detail::make_gate(GateKind::SingleQubit, "SX",
                             {Amplitude{0.5, 0.5}, Amplitude{0.5, -0.5}, Amplitude{0.5, -0.5},
                              Amplitude{0.5, 0.5}},
                             t, {}, {});
}

/// Square root of Y.
inline Gate sy(unsigned t) {
    return detail::make_gate(GateKind::SingleQubit, "SY",
                             {Amplitude{0.5, 0.5}, Amplitude{-0.5, -0.5}, Amplitude{0.5, 0.5},
                              Amplitude{0.5, 0.5}},
                             t, {}, {});
}

inline Gate rx(unsigned t, double theta) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    return detail::make_gate(GateKind::SingleQubit, "RX",
                             {Amplitude{c, 0}, Amplitude{0, -s}, Amplitude{0, -s}, Amplitude{c, 0}}, t, {},
                             {theta});
}

inline Gate ry(unsigned t, double theta) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    return detail::make_gate(GateKind::SingleQubit, "RY",
                             {Amplitude{c, 0}, Amplitude{-s, 0}, Amplitude{s, 0}, Amplitude{c, 0}}, t, {},
                             {theta});
}

inline Gate rz(unsigned t, double theta) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    return detail::make_gate(GateKind::SingleQubit, "RZ",
                             {Amplitude{c, -s}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{c, s}}, t, {},
                             {theta});
}

inline Gate cx(unsigned t, unsigned control) {
    return detail::make_gate(GateKind::ControlledSingleQubit, "CX", detail::matrix_x(), t, {control}, {});
}

inline Gate cz(unsigned t, unsigned control) {
    return detail::make_gate(GateKind::ControlledSingleQubit, "CZ",
                             {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{-1, 0}}, t,
                             {control}, {});
}

/// Controlled phase: diag(1, e^{i theta}) on the target when the control is 1.
inline Gate cp(unsigned t, unsigned control, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return detail::make_gate(GateKind::ControlledSingleQubit, "CP",
                             {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{c, s}}, t,
                             {control}, {theta});
}

inline Gate ccx(unsigned t, unsigned c1, unsigned c2) {
    return detail::make_gate(GateKind::MultiControlledX, "CCX", detail::matrix_x(), t, {c1, c2}, {});
}

/// X on the target gated by an arbitrary set of controls. With fewer than
/// two controls this degenerates to CX or plain X; callers wanting those
/// spellings should use the dedicated factories.
inline Gate mcx(unsigned t, std::vector<unsigned> controls) {
    if (controls.size() < 2) {
        throw ArgumentError("mcx: need at least 2 control qubits, got " + std::to_string(controls.size()));
    }
    const GateKind kind = GateKind::MultiControlledX;
    const std::string name = controls.size() == 2 ? "CCX" : "MCX";
    return detail::make_gate(kind, name, detail::matrix_x(), t, std::move(controls), {});
}

} // namespace gates

/// An ordered gate list over a fixed qubit count.
struct Circuit {
    unsigned qubits = 0;
    std::vector<Gate> gates;

    friend bool operator==(const Circuit &, const Circuit &) = default;

    /// Checks every gate addresses only qubits below `qubits`. Distinctness
    /// of target/controls is already enforced at construction.
    void validate() const {
        if (qubits == 0) {
            throw ConfigError("circuit: qubit count must be positive");
        }
        for (std::size_t i = 0; i < gates.size(); ++i) {
            const Gate &g = gates[i];
            if (g.target >= qubits) {
                throw ConfigError("circuit: gate " + std::to_string(i) + " (" + g.name + ") targets qubit " +
                                  std::to_string(g.target) + " but the circuit has " +
                                  std::to_string(qubits) + " qubits");
            }
            for (unsigned c : g.controls) {
                if (c >= qubits) {
                    throw ConfigError("circuit: gate " + std::to_string(i) + " (" + g.name +
                                      ") uses control qubit " + std::to_string(c) +
                                      " but the circuit has " + std::to_string(qubits) + " qubits");
                }
            }
        }
    }
};

} // namespace qcsim
