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

#include "qcsim/gates.hpp"

#include <cmath>

#include "gtest/gtest.h"

namespace {

using qcsim::Amplitude;
using qcsim::ArgumentError;
using qcsim::Circuit;
using qcsim::ConfigError;
using qcsim::Gate;
using qcsim::GateKind;
using qcsim::GateMatrix;

GateMatrix matmul(const GateMatrix &a, const GateMatrix &b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

double max_entry_distance(const GateMatrix &a, const GateMatrix &b) {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

TEST(GateFactories, AllNamedGatesAreUnitary) {
    const Gate all[] = {
        qcsim::gates::h(0),        qcsim::gates::x(0),        qcsim::gates::y(0),
        qcsim::gates::z(0),        qcsim::gates::s(0),        qcsim::gates::t(0),
        qcsim::gates::sx(0),       qcsim::gates::sy(0),       qcsim::gates::rx(0, 0.7),
        qcsim::gates::ry(0, 1.3),  qcsim::gates::rz(0, -2.1), qcsim::gates::cx(0, 1),
        qcsim::gates::cz(0, 1),    qcsim::gates::cp(0, 1, 0.4), qcsim::gates::ccx(0, 1, 2),
        qcsim::gates::mcx(0, {1, 2, 3}),
    };
    for (const Gate &g : all) {
        EXPECT_LE(qcsim::unitarity_defect(g.u), qcsim::kUnitarityTolerance) << g.name;
    }
}

TEST(GateFactories, SquareRootGatesSquareToTheirNames) {
    const GateMatrix x = qcsim::gates::x(0).u;
    const GateMatrix y = qcsim::gates::y(0).u;
    EXPECT_LT(max_entry_distance(matmul(qcsim::gates::sx(0).u, qcsim::gates::sx(0).u), x), 1e-15);
    EXPECT_LT(max_entry_distance(matmul(qcsim::gates::sy(0).u, qcsim::gates::sy(0).u), y), 1e-15);
}

TEST(GateFactories, RotationsComposeToIdentity) {
    const GateMatrix identity = {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{1, 0}};
    EXPECT_LT(max_entry_distance(matmul(qcsim::gates::rz(0, 0.9).u, qcsim::gates::rz(0, -0.9).u), identity),
              1e-15);
    EXPECT_LT(max_entry_distance(matmul(qcsim::gates::rx(0, 1.7).u, qcsim::gates::rx(0, -1.7).u), identity),
              1e-15);
}

TEST(GateFactories, RejectNonUnitaryMatrix) {
    const GateMatrix scaled = {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{2, 0}};
    EXPECT_THROW(qcsim::detail::make_gate(GateKind::SingleQubit, "BAD", scaled, 0, {}, {}), ArgumentError);
    // Just past the acceptance threshold.
    const double eps = 3e-12;
    const GateMatrix slightly_off = {Amplitude{1 + eps, 0}, Amplitude{0, 0}, Amplitude{0, 0},
                                     Amplitude{1, 0}};
    EXPECT_THROW(qcsim::detail::make_gate(GateKind::SingleQubit, "BAD", slightly_off, 0, {}, {}),
                 ArgumentError);
}

TEST(GateFactories, RejectControlTargetCollisions) {
    EXPECT_THROW(qcsim::gates::cx(3, 3), ArgumentError);
    EXPECT_THROW(qcsim::gates::ccx(1, 1, 2), ArgumentError);
    EXPECT_THROW(qcsim::gates::ccx(0, 2, 2), ArgumentError);
    EXPECT_THROW(qcsim::gates::mcx(0, {1, 2, 1}), ArgumentError);
    EXPECT_THROW(qcsim::gates::mcx(0, {1}), ArgumentError);
}

TEST(GateFactories, MultiControlNamingFollowsControlCount) {
    EXPECT_EQ(qcsim::gates::mcx(0, {1, 2}).name, "CCX");
    EXPECT_EQ(qcsim::gates::mcx(0, {1, 2, 3}).name, "MCX");
    EXPECT_EQ(qcsim::gates::mcx(0, {1, 2, 3}).kind, GateKind::MultiControlledX);
}

TEST(GateDescriptor, DistinguishesActionRelevantFields) {
    const auto a = qcsim::gates::h(0).descriptor_bytes();
    const auto b = qcsim::gates::h(1).descriptor_bytes();
    const auto c = qcsim::gates::x(0).descriptor_bytes();
    const auto d = qcsim::gates::cx(0, 1).descriptor_bytes();
    EXPECT_NE(a, b);
    EXPECT_NE(a, c);
    EXPECT_NE(c, d);
    EXPECT_EQ(a, qcsim::gates::h(0).descriptor_bytes());
}

TEST(Circuit, ValidateChecksQubitRanges) {
    Circuit c;
    c.qubits = 4;
    c.gates.push_back(qcsim::gates::h(3));
    c.gates.push_back(qcsim::gates::cx(0, 3));
    EXPECT_NO_THROW(c.validate());
    c.gates.push_back(qcsim::gates::h(4));
    EXPECT_THROW(c.validate(), ConfigError);
    c.gates.pop_back();
    c.gates.push_back(qcsim::gates::cx(0, 7));
    EXPECT_THROW(c.validate(), ConfigError);
    c.qubits = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

} // namespace
