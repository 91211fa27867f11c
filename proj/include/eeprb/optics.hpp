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

#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>

#include "eeprb/core.hpp"
#include "eeprb/random.hpp"

namespace eeprb {

// ---------------------------------------------------------------------------
// Source

/// Pair polarizations phi and phi + pi/2, phi uniform on the circle.
struct OrthogonalRandom {};
/// Both photons carry the same uniform phi.
struct ParallelRandom {};
/// Photon 1 always has polarization p, photon 2 always q. Consumes no draw.
struct FixedPolarization {
    Angle p;
    Angle q;
};

using PolarizationMode = std::variant<OrthogonalRandom, ParallelRandom, FixedPolarization>;

struct Photon {
    Angle phi;
    double tau_total = 0.0;
};

inline bool draws_source_angle(const PolarizationMode &mode) {
    return !std::holds_alternative<FixedPolarization>(mode);
}

/// Builds the pair from an already drawn source angle (ignored for fixed polarizations).
inline std::pair<Photon, Photon> emit_pair(const PolarizationMode &mode, Angle phi) {
    if (std::holds_alternative<OrthogonalRandom>(mode)) {
        return {Photon{phi}, Photon{phi + kQuarterTurn}};
    }
    if (std::holds_alternative<ParallelRandom>(mode)) {
        return {Photon{phi}, Photon{phi}};
    }
    const auto &fixed = std::get<FixedPolarization>(mode);
    return {Photon{fixed.p}, Photon{fixed.q}};
}

inline std::pair<Photon, Photon> emit_pair(const PolarizationMode &mode, RandomStream &stream) {
    const Angle phi = draws_source_angle(mode) ? stream.uniform_angle() : Angle{};
    return emit_pair(mode, phi);
}

// ---------------------------------------------------------------------------
// Retardation laws

struct NoRetardation {};

/// tau = r' Tmax |sin 2(phi - a)|^alpha |(1 - x.u)/2|^beta, then u <- x.
struct MemorylessRetardation {};

/// tau = r' Tmax |sin 2(phi - a)|^alpha |(1 - u.u)/2|^beta, then u <- gamma u + (1 - gamma) x.
struct LearningRetardation {
    double gamma = 0.9;
};

using RetardationLaw = std::variant<NoRetardation, MemorylessRetardation, LearningRetardation>;

struct RetardationParams {
    double t_max = 5000.0;
    double alpha = 4.0;
    double beta = 0.5;
};

class BeamSplitter {
   public:
    BeamSplitter() = default;
    BeamSplitter(Angle orientation, RetardationLaw law, RetardationParams params)
        : orientation_(orientation), law_(law), params_(params) {
        if (const auto *learning = std::get_if<LearningRetardation>(&law_)) {
            if (!(learning->gamma > 0.0 && learning->gamma < 1.0)) {
                throw std::invalid_argument("learning rate gamma must lie in (0, 1)");
            }
        }
    }

    Angle orientation() const { return orientation_; }
    const RetardationLaw &law() const { return law_; }
    const RetardationParams &params() const { return params_; }

    /// Internal state of the splitter. Starts at the zero vector.
    Vec2 memory() const { return memory_; }
    void set_memory(Vec2 u) { memory_ = u; }

   private:
    Angle orientation_;
    RetardationLaw law_ = NoRetardation{};
    RetardationParams params_;
    Vec2 memory_{0.0, 0.0};
};

/// Malus-law branching. S = +1 iff cos^2(phi - a) > r; the outgoing photon is
/// polarized along a (S = +1) or a + pi/2 (S = -1). tau_total is carried over.
inline std::pair<Spin, Photon> split(const BeamSplitter &bs, const Photon &in, double r) {
    const double c = std::cos(in.phi.rad - bs.orientation().rad);
    if (c * c > r) {
        return {Spin::plus, Photon{bs.orientation(), in.tau_total}};
    }
    return {Spin::minus, Photon{bs.orientation() + kQuarterTurn, in.tau_total}};
}

inline std::pair<Spin, Photon> split(const BeamSplitter &bs, const Photon &in, RandomStream &stream) {
    return split(bs, in, stream.uniform());
}

/// Retardation suffered by the incoming photon; updates the splitter memory.
/// r_prime is the uniform draw in (0, 1). tau is computed before the memory update.
inline double retard(BeamSplitter &bs, const Photon &in, double r_prime) {
    const RetardationLaw &law = bs.law();
    if (std::holds_alternative<NoRetardation>(law)) {
        return 0.0;
    }
    const RetardationParams &p = bs.params();
    const UnitVec2 x = unit_vec(in.phi);
    const Vec2 u = bs.memory();
    const double s = std::abs(std::sin(2.0 * (in.phi.rad - bs.orientation().rad)));

    double mismatch;
    if (std::holds_alternative<MemorylessRetardation>(law)) {
        // x == u exactly means a repeated polarization: no retardation, regardless of rounding in x.u.
        mismatch = (x == u) ? 0.0 : std::abs((1.0 - dot(x, u)) / 2.0);
        bs.set_memory(x);
    } else {
        const double gamma = std::get<LearningRetardation>(law).gamma;
        mismatch = std::abs((1.0 - norm_squared(u)) / 2.0);
        bs.set_memory(gamma * u + (1.0 - gamma) * x);
    }
    return r_prime * p.t_max * std::pow(s, p.alpha) * std::pow(mismatch, p.beta);
}

inline double retard(BeamSplitter &bs, const Photon &in, RandomStream &stream) {
    return retard(bs, in, stream.uniform());
}

}  // namespace eeprb
