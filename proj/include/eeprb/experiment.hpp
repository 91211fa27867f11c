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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "eeprb/core.hpp"
#include "eeprb/optics.hpp"
#include "eeprb/random.hpp"
#include "eeprb/station.hpp"

namespace eeprb {

enum class Topology { eprb, eeprb };

struct RunConfig {
    Topology topology = Topology::eeprb;
    PolarizationMode source = OrthogonalRandom{};
    Settings settings{};
    RetardationLaw law = MemorylessRetardation{};
    RetardationParams retardation{};
    IdentificationRule identification = LocalWindow{1.0};
    double eta = 1.0;
    std::int64_t n_pairs = 1'000'000;
    std::uint64_t seed = 1;
    /// Replay the identical random stream for every setting of a sweep.
    bool cfd = false;
};

/// Throws std::invalid_argument describing the first violated constraint.
inline void validate(const RunConfig &config) {
    if (config.n_pairs < 1) {
        throw std::invalid_argument("number of pairs must be at least 1");
    }
    if (!(config.eta >= 0.0 && config.eta <= 1.0)) {
        throw std::invalid_argument("detection efficiency eta must lie in [0, 1]");
    }
    const RetardationParams &r = config.retardation;
    if (!(r.t_max >= 0.0) || !(r.alpha >= 0.0) || !(r.beta >= 0.0)) {
        throw std::invalid_argument("t_max, alpha and beta must be non-negative");
    }
    if (const auto *learning = std::get_if<LearningRetardation>(&config.law)) {
        if (!(learning->gamma > 0.0 && learning->gamma < 1.0)) {
            throw std::invalid_argument("learning rate gamma must lie in (0, 1)");
        }
    }
    const double window = std::visit(
        [](const auto &rule) -> double {
            if constexpr (requires { rule.window; }) {
                return rule.window;
            } else {
                return 0.0;
            }
        },
        config.identification);
    if (!(window >= 0.0)) {
        throw std::invalid_argument("time window must be non-negative");
    }
}

// ---------------------------------------------------------------------------
// Data sets

/// One detection event as recorded by one station. s_second is 0 in EPRB.
struct StationRecord {
    std::int8_t s_first = 1;
    std::int8_t s_second = 0;
    std::uint8_t w = 1;

    bool operator==(const StationRecord &) const = default;
};

/// Per-station lists, index-aligned by emission number.
struct Dataset {
    Topology topology = Topology::eeprb;
    std::vector<StationRecord> station1;
    std::vector<StationRecord> station2;

    std::size_t size() const { return station1.size(); }
    bool operator==(const Dataset &) const = default;
};

/// Optional per-event hook, called with (n, arm1, arm2) before identification.
struct NoTrace {
    void operator()(std::int64_t, const ArmResult &, const ArmResult &) const {}
};

/// Generates N detection-event pairs.
///
/// Per emission the uniforms are drawn in this fixed order:
///   source angle (not for fixed polarizations),
///   r and r' for BS1, r and r' for BS2,
///   r and r' for BS3-or-BS4, r and r' for BS5-or-BS6   (EEPRB only),
///   efficiency draw for OS1, efficiency draw for OS2.
/// The count is independent of the outcomes, so streams stay aligned across
/// settings when the same seed is replayed.
template <class Trace = NoTrace>
Dataset run(const RunConfig &config, Trace &&trace = {}) {
    validate(config);
    const bool extended = config.topology == Topology::eeprb;
    const Settings &s = config.settings;
    Station os1 = extended ? Station(s.a, s.c, config.law, config.retardation)
                           : Station(s.a, config.law, config.retardation);
    Station os2 = extended ? Station(s.b, s.d, config.law, config.retardation)
                           : Station(s.b, config.law, config.retardation);

    RandomStream stream(config.seed);
    const bool draw_phi = draws_source_angle(config.source);
    const auto n_pairs = static_cast<std::size_t>(config.n_pairs);

    Dataset ds;
    ds.topology = config.topology;
    ds.station1.reserve(n_pairs);
    ds.station2.reserve(n_pairs);

    for (std::size_t n = 0; n < n_pairs; ++n) {
        const Angle phi = draw_phi ? stream.uniform_angle() : Angle{};
        const auto [photon1, photon2] = emit_pair(config.source, phi);

        ArmDraws d1;
        ArmDraws d2;
        d1.split_first = stream.uniform();
        d1.retard_first = stream.uniform();
        d2.split_first = stream.uniform();
        d2.retard_first = stream.uniform();
        if (extended) {
            d1.split_second = stream.uniform();
            d1.retard_second = stream.uniform();
            d2.split_second = stream.uniform();
            d2.retard_second = stream.uniform();
        }
        const double r_eff1 = stream.uniform();
        const double r_eff2 = stream.uniform();

        const ArmResult arm1 = process_arm(os1, photon1, d1);
        const ArmResult arm2 = process_arm(os2, photon2, d2);
        trace(static_cast<std::int64_t>(n), arm1, arm2);

        auto [w1, w2] = identify(config.identification, arm1.tau_reduced, arm2.tau_reduced);
        w1 = apply_efficiency(w1, config.eta, r_eff1);
        w2 = apply_efficiency(w2, config.eta, r_eff2);

        ds.station1.push_back({static_cast<std::int8_t>(value(arm1.s_first)),
                               static_cast<std::int8_t>(arm1.s_second ? value(*arm1.s_second) : 0),
                               static_cast<std::uint8_t>(w1)});
        ds.station2.push_back({static_cast<std::int8_t>(value(arm2.s_first)),
                               static_cast<std::int8_t>(arm2.s_second ? value(*arm2.s_second) : 0),
                               static_cast<std::uint8_t>(w2)});
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Moments
//
// A moment is named by the subset of {S1, S2, S3, S4} it multiplies, encoded
// as a bit mask: bit i-1 set means S_i is a factor.

using MomentMask = unsigned;

/// The fifteen moments of orders 1 to 4 in reporting order.
inline constexpr std::array<MomentMask, 15> kMomentOrder = {
    0b0001, 0b0010, 0b0100, 0b1000,                  // 1 2 3 4
    0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100,  // 12 13 14 23 24 34
    0b0111, 0b1011, 0b1101, 0b1110,                  // 123 124 134 234
    0b1111,                                          // 1234
};

/// The six pair correlations.
inline constexpr std::array<MomentMask, 6> kPairMoments = {0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100};

/// "13" for S1 S3, "1234" for the fourth moment.
inline std::string moment_label(MomentMask mask) {
    std::string out;
    for (int i = 0; i < 4; ++i) {
        if (mask & (1u << i)) {
            out.push_back(static_cast<char>('1' + i));
        }
    }
    return out;
}

inline MomentMask moment_mask(std::string_view label) {
    MomentMask mask = 0;
    for (const char c : label) {
        if (c < '1' || c > '4') {
            throw std::invalid_argument("moment label may only contain digits 1-4");
        }
        mask |= 1u << (c - '1');
    }
    if (mask == 0) {
        throw std::invalid_argument("empty moment label");
    }
    return mask;
}

constexpr int moment_order(MomentMask mask) {
    int k = 0;
    for (int i = 0; i < 4; ++i) {
        k += (mask >> i) & 1u;
    }
    return k;
}

/// Moments without (K) and with (E) photon identification.
///
/// Stored as exact integer sums so that every ratio is the correctly rounded
/// quotient of two integers.
class MomentEstimates {
   public:
    MomentEstimates() = default;

    static MomentEstimates from_sums(Topology topology, std::int64_t n_pairs, std::int64_t n_coincident,
                                     const std::array<std::int64_t, 16> &k_sums,
                                     const std::array<std::int64_t, 16> &e_sums) {
        MomentEstimates m;
        m.topology_ = topology;
        m.n_pairs_ = n_pairs;
        m.n_coincident_ = n_coincident;
        m.k_sums_ = k_sums;
        m.e_sums_ = e_sums;
        return m;
    }

    Topology topology() const { return topology_; }
    std::int64_t n_pairs() const { return n_pairs_; }
    std::int64_t n_coincident() const { return n_coincident_; }
    double pair_ratio() const {
        return n_pairs_ > 0 ? static_cast<double>(n_coincident_) / static_cast<double>(n_pairs_) : 0.0;
    }

    /// S3 and S4 only exist in the extended topology.
    bool has(MomentMask mask) const { return topology_ == Topology::eeprb || (mask & 0b1100) == 0; }

    std::optional<double> K(MomentMask mask) const {
        if (!has(mask) || n_pairs_ == 0) {
            return std::nullopt;
        }
        return static_cast<double>(k_sums_[mask]) / static_cast<double>(n_pairs_);
    }

    /// Undefined (nullopt) when no pair was identified.
    std::optional<double> E(MomentMask mask) const {
        if (!has(mask) || n_coincident_ == 0) {
            return std::nullopt;
        }
        return static_cast<double>(e_sums_[mask]) / static_cast<double>(n_coincident_);
    }

    std::optional<double> K(std::string_view label) const { return K(moment_mask(label)); }
    std::optional<double> E(std::string_view label) const { return E(moment_mask(label)); }

    std::int64_t k_sum(MomentMask mask) const { return k_sums_[mask]; }
    std::int64_t e_sum(MomentMask mask) const { return e_sums_[mask]; }

   private:
    Topology topology_ = Topology::eeprb;
    std::int64_t n_pairs_ = 0;
    std::int64_t n_coincident_ = 0;
    std::array<std::int64_t, 16> k_sums_{};
    std::array<std::int64_t, 16> e_sums_{};
};

inline MomentEstimates estimate_moments(const Dataset &ds) {
    if (ds.station1.size() != ds.station2.size()) {
        throw std::invalid_argument("station data sets must have equal length");
    }
    std::array<std::int64_t, 16> k_sums{};
    std::array<std::int64_t, 16> e_sums{};
    std::int64_t coincident = 0;
    const bool extended = ds.topology == Topology::eeprb;

    for (std::size_t n = 0; n < ds.size(); ++n) {
        const StationRecord &r1 = ds.station1[n];
        const StationRecord &r2 = ds.station2[n];
        const std::array<int, 4> s = {r1.s_first, r2.s_first, extended ? r1.s_second : 1, extended ? r2.s_second : 1};
        std::array<int, 16> prod;
        prod[0] = 1;
        for (MomentMask mask = 1; mask < 16; ++mask) {
            const int low = std::countr_zero(mask);
            prod[mask] = prod[mask & (mask - 1)] * s[low];
        }
        const int w = r1.w * r2.w;
        coincident += w;
        for (MomentMask mask = 1; mask < 16; ++mask) {
            k_sums[mask] += prod[mask];
            e_sums[mask] += w * prod[mask];
        }
    }
    return MomentEstimates::from_sums(ds.topology, static_cast<std::int64_t>(ds.size()), coincident, k_sums,
                                      e_sums);
}

// ---------------------------------------------------------------------------
// CHSH

struct ChshValue {
    double k = 0.0;
    std::optional<double> e;
};

/// S13 + S14 + S23 - S24 from a single extended run. Each event contributes
/// exactly +2 or -2, so |value| <= 2 holds exactly, also after rounding.
inline ChshValue chsh_single_run(const MomentEstimates &m) {
    if (m.topology() != Topology::eeprb) {
        throw std::invalid_argument("single-run CHSH needs the extended topology");
    }
    const auto combo = [](auto sum) { return sum(0b0101) + sum(0b1001) + sum(0b0110) - sum(0b1010); };
    ChshValue out;
    out.k = static_cast<double>(combo([&](MomentMask mk) { return m.k_sum(mk); })) /
            static_cast<double>(m.n_pairs());
    if (m.n_coincident() > 0) {
        out.e = static_cast<double>(combo([&](MomentMask mk) { return m.e_sum(mk); })) /
                static_cast<double>(m.n_coincident());
    }
    return out;
}

/// |E(a,b) - E(a,b') + E(a',b) + E(a',b')| from four separate runs.
inline double chsh_multi_run(double e_ab, double e_ab_prime, double e_a_prime_b, double e_a_prime_b_prime) {
    return std::abs(e_ab - e_ab_prime + e_a_prime_b + e_a_prime_b_prime);
}

// ---------------------------------------------------------------------------
// Sweeps

/// a = b + theta, c = a + c_offset, d fixed.
struct SweepGeometry {
    Angle b{0.0};
    Angle c_offset{kPi / 6};
    Angle d{kPi / 3};

    Settings at(double theta) const {
        const Angle a = b + Angle{theta};
        return Settings{a, b, a + c_offset, d};
    }
};

struct SweepPoint {
    double theta = 0.0;
    Settings settings;
    std::uint64_t seed = 0;
    MomentEstimates moments;
};

/// n equally spaced values from 0 to theta_max inclusive.
inline std::vector<double> theta_grid(int points, double theta_max) {
    if (points < 1) {
        throw std::invalid_argument("grid needs at least one point");
    }
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        grid[static_cast<std::size_t>(i)] = points == 1 ? 0.0 : theta_max * i / (points - 1);
    }
    return grid;
}

inline std::uint64_t sweep_point_seed(const RunConfig &base, std::size_t index) {
    return base.cfd ? base.seed : derive_seed(base.seed, index);
}

/// Runs every grid point. Points are independent and may run on several
/// threads; results come back in grid order.
inline std::vector<SweepPoint> run_sweep(const RunConfig &base, std::span<const double> grid,
                                         const SweepGeometry &geometry, unsigned threads = 0) {
    if (grid.empty()) {
        throw std::invalid_argument("sweep grid must not be empty");
    }
    validate(base);
    std::vector<SweepPoint> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out[i].theta = grid[i];
        out[i].settings = geometry.at(grid[i]);
        out[i].seed = sweep_point_seed(base, i);
    }
    const auto work = [&](std::size_t i) {
        RunConfig config = base;
        config.settings = out[i].settings;
        config.seed = out[i].seed;
        out[i].moments = estimate_moments(run(config));
    };

    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, grid.size()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            work(i);
        }
        return out;
    }
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < grid.size(); i += threads) {
                work(i);
            }
        });
    }
    pool.clear();
    return out;
}

}  // namespace eeprb
