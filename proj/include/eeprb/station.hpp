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
#include <optional>
#include <utility>
#include <variant>

#include "eeprb/core.hpp"
#include "eeprb/optics.hpp"
#include "eeprb/random.hpp"

namespace eeprb {

/// The uniforms one arm consumes for one photon, in the order they are drawn.
struct ArmDraws {
    double split_first = 0.5;
    double retard_first = 0.5;
    double split_second = 0.5;
    double retard_second = 0.5;
};

/// Outcome of one photon passing through one observation station.
///
/// tau_reduced is the detection time with the time of flight and the emission
/// offset n * Delta removed; neither quantity affects any statistic.
struct ArmResult {
    Spin s_first = Spin::plus;
    std::optional<Spin> s_second;
    double tau_reduced = 0.0;
    double tau_first = 0.0;
    double tau_second = 0.0;
    int detector = 1;
};

/// One observation station: the first beam splitter and, in the extended
/// topology, the pair it feeds ({plus branch, minus branch}). Both second-stage
/// splitters carry the same orientation.
class Station {
   public:
    /// Single-stage station (EPRB).
    Station(Angle first, const RetardationLaw &law, RetardationParams params) : first_(first, law, params) {}

    /// Two-stage station (EEPRB).
    Station(Angle first, Angle second, const RetardationLaw &law, RetardationParams params)
        : first_(first, law, params),
          second_(std::array<BeamSplitter, 2>{BeamSplitter(second, law, params), BeamSplitter(second, law, params)}) {}

    bool two_stage() const { return second_.has_value(); }

    BeamSplitter &first() { return first_; }
    const BeamSplitter &first() const { return first_; }
    BeamSplitter &plus() { return second_.value()[0]; }
    BeamSplitter &minus() { return second_.value()[1]; }

   private:
    BeamSplitter first_;
    std::optional<std::array<BeamSplitter, 2>> second_;
};

/// Routes one photon through the station. Only this station's splitters and
/// the photon are touched.
inline ArmResult process_arm(Station &station, const Photon &photon, const ArmDraws &draws) {
    ArmResult out;
    out.tau_first = retard(station.first(), photon, draws.retard_first);
    auto [s_first, after_first] = split(station.first(), photon, draws.split_first);
    out.s_first = s_first;
    after_first.tau_total += out.tau_first;

    if (!station.two_stage()) {
        out.tau_reduced = after_first.tau_total;
        out.detector = s_first == Spin::plus ? 1 : 2;
        return out;
    }

    BeamSplitter &next = s_first == Spin::plus ? station.plus() : station.minus();
    out.tau_second = retard(next, after_first, draws.retard_second);
    const auto [s_second, after_second] = split(next, after_first, draws.split_second);
    out.s_second = s_second;
    out.tau_reduced = after_second.tau_total + out.tau_second;
    out.detector = detector_index(s_first, s_second);
    return out;
}

/// Draws in the order split_first, retard_first, split_second, retard_second.
inline ArmResult process_arm(Station &station, const Photon &photon, RandomStream &stream) {
    ArmDraws draws;
    draws.split_first = stream.uniform();
    draws.retard_first = stream.uniform();
    if (station.two_stage()) {
        draws.split_second = stream.uniform();
        draws.retard_second = stream.uniform();
    }
    return process_arm(station, photon, draws);
}

// ---------------------------------------------------------------------------
// Photon identification

/// Accept when the reduced time tag falls in [0, W].
struct LocalWindow {
    double window = 1.0;
};
/// Accept both events of a pair when their time tags differ by at most W.
struct CoincidenceWindow {
    double window = 1.0;
};
/// Every detection event counts as a photon.
struct NoIdentification {};

using IdentificationRule = std::variant<LocalWindow, CoincidenceWindow, NoIdentification>;

inline int identify_local(double tau_reduced, double window) {
    return (tau_reduced >= 0.0 && tau_reduced <= window) ? 1 : 0;
}

inline std::pair<int, int> identify_coincidence(double tau1, double tau2, double window) {
    const int w = std::abs(tau1 - tau2) <= window ? 1 : 0;
    return {w, w};
}

inline std::pair<int, int> identify(const IdentificationRule &rule, double tau1, double tau2) {
    if (const auto *local = std::get_if<LocalWindow>(&rule)) {
        return {identify_local(tau1, local->window), identify_local(tau2, local->window)};
    }
    if (const auto *coinc = std::get_if<CoincidenceWindow>(&rule)) {
        return identify_coincidence(tau1, tau2, coinc->window);
    }
    return {1, 1};
}

/// Keeps w when r'' <= eta. The draw is taken by the caller even when w == 0.
inline int apply_efficiency(int w, double eta, double r_efficiency) { return r_efficiency <= eta ? w : 0; }

inline int apply_efficiency(int w, double eta, RandomStream &stream) {
    return apply_efficiency(w, eta, stream.uniform());
}

}  // namespace eeprb
