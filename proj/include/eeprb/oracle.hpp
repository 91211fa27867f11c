// Copyright 2026 The eeprb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <string_view>

#include <Eigen/Dense>

#include "eeprb/core.hpp"
#include "eeprb/experiment.hpp"

namespace eeprb::oracle {

// ---------------------------------------------------------------------------
// Joint distributions over (S1, S2, S3, S4)

enum class Model { maxwell, quantum, flipped, product };

inline std::string_view model_name(Model m) {
    switch (m) {
        case Model::maxwell:
            return "maxwell";
        case Model::quantum:
            return "quantum";
        case Model::flipped:
            return "flipped";
        case Model::product:
            return "product";
    }
    return "?";
}

using Outcome = std::array<int, 4>;

/// Outcome index k: bit i set means S_{i+1} = -1.
constexpr Outcome outcome(unsigned k) {
    return {(k & 1u) ? -1 : 1, (k & 2u) ? -1 : 1, (k & 4u) ? -1 : 1, (k & 8u) ? -1 : 1};
}

constexpr int product(const Outcome &s, MomentMask mask) {
    int p = 1;
    for (int i = 0; i < 4; ++i) {
        if (mask & (1u << i)) {
            p *= s[static_cast<std::size_t>(i)];
        }
    }
    return p;
}

/// Probabilities (or Maxwell intensities) of the 16 outcomes. The conditions
/// under which the experiment runs are implied by `model`; they play no
/// computational role.
struct JointDistribution16 {
    Model model = Model::quantum;
    double i0 = 1.0;
    std::array<double, 16> weight{};

    double at(const Outcome &s) const {
        unsigned k = 0;
        for (unsigned i = 0; i < 4; ++i) {
            k |= (s[i] == -1 ? 1u : 0u) << i;
        }
        return weight[k];
    }

    double total() const {
        double t = 0.0;
        for (const double w : weight) {
            t += w;
        }
        return t;
    }

    /// Sum of S_i...S_j times the weight. Equals the expectation for
    /// normalized distributions and the Maxwell K-hat for intensities.
    double moment(MomentMask mask) const {
        double m = 0.0;
        for (unsigned k = 0; k < 16; ++k) {
            m += product(outcome(k), mask) * weight[k];
        }
        return m;
    }
};

/// Closed-form or summed moments of orders 1-4, indexed by mask.
using MomentTable = std::array<double, 16>;

inline MomentTable moments_of(const JointDistribution16 &dist) {
    MomentTable t{};
    for (MomentMask mask = 1; mask < 16; ++mask) {
        t[mask] = dist.moment(mask);
    }
    return t;
}

/// Builds a distribution from a weight function over outcomes.
template <class F>
JointDistribution16 tabulate(Model model, double i0, F &&f) {
    JointDistribution16 d;
    d.model = model;
    d.i0 = i0;
    for (unsigned k = 0; k < 16; ++k) {
        d.weight[k] = f(outcome(k));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Classical optics

/// Correlated intensity for one realization of the source angle phi, with
/// phi0 the fixed difference between the two beam polarizations.
inline double maxwell_integrand(int s1, int s2, Angle a, Angle b, Angle phi, Angle phi0, double i0 = 1.0) {
    return i0 * i0 * (1.0 + s1 * cos2(phi, a)) / 2.0 * (1.0 + s2 * cos2(phi + phi0, b)) / 2.0;
}

/// Integrand averaged over a uniform phi.
inline double maxwell_pair(int s1, int s2, Angle a, Angle b, Angle phi0, double i0 = 1.0) {
    return i0 * i0 / 4.0 * (1.0 + 0.5 * s1 * s2 * std::cos(2.0 * (a.rad - b.rad + phi0.rad)));
}

inline JointDistribution16 maxwell_joint(const Settings &st, Angle phi0, double i0 = 1.0) {
    const double c12 = std::cos(2.0 * (st.a.rad - st.b.rad + phi0.rad));
    const double c13 = cos2(st.a, st.c);
    const double c24 = cos2(st.b, st.d);
    return tabulate(Model::maxwell, i0, [&](const Outcome &s) {
        return i0 * i0 / 16.0 * (1.0 + 0.5 * s[0] * s[1] * c12) * (1.0 + s[0] * s[2] * c13) *
               (1.0 + s[1] * s[3] * c24);
    });
}

/// K-hat moments in closed form.
inline MomentTable maxwell_moments(const Settings &st, Angle phi0, double i0 = 1.0) {
    const double norm = i0 * i0;
    const double half12 = 0.5 * std::cos(2.0 * (st.a.rad - st.b.rad + phi0.rad));
    const double c13 = cos2(st.a, st.c);
    const double c24 = cos2(st.b, st.d);
    MomentTable t{};
    t[moment_mask("12")] = norm * half12;
    t[moment_mask("13")] = norm * c13;
    t[moment_mask("14")] = norm * half12 * c24;
    t[moment_mask("23")] = norm * half12 * c13;
    t[moment_mask("24")] = norm * c24;
    t[moment_mask("34")] = norm * half12 * c13 * c24;
    t[moment_mask("1234")] = norm * c13 * c24;
    return t;
}

// ---------------------------------------------------------------------------
// Probabilistic models

/// Singlet state in the photon picture.
inline JointDistribution16 quantum_joint(const Settings &st) {
    const double c12 = cos2(st.a, st.b);
    const double c13 = cos2(st.a, st.c);
    const double c24 = cos2(st.b, st.d);
    return tabulate(Model::quantum, 1.0, [&](const Outcome &s) {
        return (1.0 - s[0] * s[1] * c12) * (1.0 + s[0] * s[2] * c13) * (1.0 + s[1] * s[3] * c24) / 16.0;
    });
}

inline double quantum_pair(int s1, int s2, Angle a, Angle b) { return (1.0 - s1 * s2 * cos2(a, b)) / 4.0; }

inline MomentTable quantum_moments(const Settings &st) {
    const double c12 = cos2(st.a, st.b);
    const double c13 = cos2(st.a, st.c);
    const double c24 = cos2(st.b, st.d);
    MomentTable t{};
    t[moment_mask("12")] = -c12;
    t[moment_mask("13")] = c13;
    t[moment_mask("14")] = -c12 * c24;
    t[moment_mask("23")] = -c12 * c13;
    t[moment_mask("24")] = c24;
    t[moment_mask("34")] = -c12 * c13 * c24;
    t[moment_mask("1234")] = c13 * c24;
    return t;
}

/// Same as the singlet model with the sign of the S1 S2 term reversed. Not
/// realizable by any two-spin density matrix.
inline JointDistribution16 flipped_joint(const Settings &st) {
    const double c12 = cos2(st.a, st.b);
    const double c13 = cos2(st.a, st.c);
    const double c24 = cos2(st.b, st.d);
    return tabulate(Model::flipped, 1.0, [&](const Outcome &s) {
        return (1.0 + s[0] * s[1] * c12) * (1.0 + s[0] * s[2] * c13) * (1.0 + s[1] * s[3] * c24) / 16.0;
    });
}

/// Photons with fixed polarizations p and q. Also the classical-optics result for I0 = 1.
inline JointDistribution16 product_joint(const Settings &st, Angle p, Angle q) {
    const double cp = cos2(st.a, p);
    const double cq = cos2(st.b, q);
    const double c13 = cos2(st.a, st.c);
    const double c24 = cos2(st.b, st.d);
    return tabulate(Model::product, 1.0, [&](const Outcome &s) {
        return (1.0 + s[0] * cp) * (1.0 + s[1] * cq) * (1.0 + s[0] * s[2] * c13) * (1.0 + s[1] * s[3] * c24) / 16.0;
    });
}

inline double product_pair(int s1, int s2, Angle a, Angle b, Angle p, Angle q) {
    return (1.0 + s1 * cos2(a, p)) / 2.0 * (1.0 + s2 * cos2(b, q)) / 2.0;
}

// ---------------------------------------------------------------------------
// Trace formula on the two-spin Hilbert space

using Matrix2 = Eigen::Matrix2cd;
using HermitianMatrix4 = Eigen::Matrix4cd;

inline Matrix2 pauli_x() { return (Matrix2() << 0, 1, 1, 0).finished(); }
inline Matrix2 pauli_y() {
    using namespace std::complex_literals;
    return (Matrix2() << 0, -1i, 1i, 0).finished();
}
inline Matrix2 pauli_z() { return (Matrix2() << 1, 0, 0, -1).finished(); }

inline HermitianMatrix4 kron(const Matrix2 &lhs, const Matrix2 &rhs) {
    HermitianMatrix4 out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out.block<2, 2>(2 * i, 2 * j) = lhs(i, j) * rhs;
        }
    }
    return out;
}

/// sigma_1 . sigma_2
inline HermitianMatrix4 spin_dot_spin() {
    return kron(pauli_x(), pauli_x()) + kron(pauli_y(), pauli_y()) + kron(pauli_z(), pauli_z());
}

inline HermitianMatrix4 rho_q(double q) {
    return (HermitianMatrix4::Identity() - q * spin_dot_spin()) / 4.0;
}

inline HermitianMatrix4 singlet_density() { return rho_q(1.0); }

/// Projector (1 + S sigma.x)/2 for a polarizer at angle theta. The axis lies
/// at 2 theta in the x-y plane, so that x(a).x(b) = cos 2(a - b).
inline Matrix2 polarizer_projector(int s, Angle theta) {
    const Matrix2 sigma_n = std::cos(2.0 * theta.rad) * pauli_x() + std::sin(2.0 * theta.rad) * pauli_y();
    return (Matrix2::Identity() + static_cast<double>(s) * sigma_n) / 2.0;
}

inline HermitianMatrix4 on_first(const Matrix2 &m) { return kron(m, Matrix2::Identity()); }
inline HermitianMatrix4 on_second(const Matrix2 &m) { return kron(Matrix2::Identity(), m); }

/// P(S1,S2,S3,S4) = Tr[rho M1(a) M1(c) M1(a) M2(b) M2(d) M2(b)].
inline double trace_probability(const HermitianMatrix4 &rho, const Outcome &s, const Settings &st) {
    const HermitianMatrix4 m1a = on_first(polarizer_projector(s[0], st.a));
    const HermitianMatrix4 m3c = on_first(polarizer_projector(s[2], st.c));
    const HermitianMatrix4 m2b = on_second(polarizer_projector(s[1], st.b));
    const HermitianMatrix4 m4d = on_second(polarizer_projector(s[3], st.d));
    return (rho * m1a * m3c * m1a * m2b * m4d * m2b).trace().real();
}

inline JointDistribution16 quantum_joint_trace(const Settings &st) {
    const HermitianMatrix4 rho = singlet_density();
    return tabulate(Model::quantum, 1.0, [&](const Outcome &s) { return trace_probability(rho, s, st); });
}

/// P(S1 | a) = Tr[rho M1(a)].
inline double trace_marginal_first(int s1, Angle a) {
    return (singlet_density() * on_first(polarizer_projector(s1, a))).trace().real();
}

/// Ascending eigenvalues of (1 - q sigma_1 . sigma_2)/4, solved numerically.
inline std::array<double, 4> rho_q_eigenvalues(double q) {
    const Eigen::SelfAdjointEigenSolver<HermitianMatrix4> solver(rho_q(q), Eigen::EigenvaluesOnly);
    const auto &ev = solver.eigenvalues();
    return {ev(0), ev(1), ev(2), ev(3)};
}

inline bool rho_q_is_density(double q) { return rho_q_eigenvalues(q)[0] >= -1e-12; }

// ---------------------------------------------------------------------------
// Bell-type functionals

using OutcomeFunction = std::function<double(const Outcome &)>;

inline double bell_functional(const JointDistribution16 &dist, const OutcomeFunction &g) {
    double sum = 0.0;
    for (unsigned k = 0; k < 16; ++k) {
        sum += g(outcome(k)) * dist.weight[k];
    }
    return sum;
}

struct BoundedFunction {
    OutcomeFunction g;
    double lower;
    double upper;
};

/// S1 S2 + S1 S3 + S2 S3, bounded by [-1, 3].
inline BoundedFunction bell_triangle() {
    return {[](const Outcome &s) { return double(s[0] * s[1] + s[0] * s[2] + s[1] * s[2]); }, -1.0, 3.0};
}

/// S1 S3 + S1 S4 + S2 S3 - S2 S4, bounded by [-2, 2].
inline BoundedFunction bell_chsh() {
    return {[](const Outcome &s) { return double(s[0] * s[2] + s[0] * s[3] + s[1] * s[2] - s[1] * s[3]); }, -2.0,
            2.0};
}

// ---------------------------------------------------------------------------
// Reference model for a simulated source

/// The theory each moment family is compared against, given the source.
struct Comparison {
    JointDistribution16 without_identification;
    JointDistribution16 with_identification;
};

inline Comparison comparison_for(const PolarizationMode &source, const Settings &st) {
    if (const auto *fixed = std::get_if<FixedPolarization>(&source)) {
        const auto d = product_joint(st, fixed->p, fixed->q);
        return {d, d};
    }
    if (std::holds_alternative<ParallelRandom>(source)) {
        return {maxwell_joint(st, Angle{0.0}), flipped_joint(st)};
    }
    return {maxwell_joint(st, kQuarterTurn), quantum_joint(st)};
}

}  // namespace eeprb::oracle
