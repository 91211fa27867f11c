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


#include <cmath>

#include "gtest/gtest.h"

#include "eeprb/optics.hpp"

using namespace eeprb;

namespace {

RetardationParams default_params() { return RetardationParams{5000.0, 4.0, 0.5}; }

double binomial_band(double p, int n) { return 4.0 * std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST(emit_pair, orthogonal) {
    RandomStream s(1);
    for (int i = 0; i < 1000; ++i) {
        const auto [p1, p2] = emit_pair(OrthogonalRandom{}, s);
        EXPECT_NEAR(dot(unit_vec(p1.phi), unit_vec(p2.phi)), 0.0, 1e-12);
        EXPECT_EQ(p1.tau_total, 0.0);
        EXPECT_EQ(p2.tau_total, 0.0);
    }
}

TEST(emit_pair, parallel) {
    RandomStream s(2);
    for (int i = 0; i < 1000; ++i) {
        const auto [p1, p2] = emit_pair(ParallelRandom{}, s);
        EXPECT_EQ(p1.phi, p2.phi);
    }
}

TEST(emit_pair, fixed_consumes_no_draw) {
    RandomStream s(3);
    RandomStream reference(3);
    const auto [p1, p2] = emit_pair(FixedPolarization{Angle{0.2}, Angle{1.1}}, s);
    EXPECT_EQ(p1.phi.rad, 0.2);
    EXPECT_EQ(p2.phi.rad, 1.1);
    EXPECT_EQ(s.next_raw(), reference.next_raw());
}

TEST(split, aligned_and_crossed) {
    const BeamSplitter bs(Angle{0.4}, NoRetardation{}, {});
    RandomStream s(4);
    for (int i = 0; i < 1000; ++i) {
        const auto [spin, out] = split(bs, Photon{Angle{0.4}}, s);
        EXPECT_EQ(spin, Spin::plus);
        EXPECT_EQ(out.phi.rad, 0.4);
        const auto [spin2, out2] = split(bs, Photon{Angle{0.4 + kPi / 2}}, s);
        EXPECT_EQ(spin2, Spin::minus);
        EXPECT_DOUBLE_EQ(out2.phi.rad, 0.4 + kPi / 2);
    }
}

TEST(split, boundary_goes_to_minus) {
    const BeamSplitter bs(Angle{0.0}, NoRetardation{}, {});
    const Photon photon{Angle{kPi / 3}};
    const double c = std::cos(kPi / 3);
    EXPECT_EQ(split(bs, photon, c * c).first, Spin::minus);
    EXPECT_EQ(split(bs, photon, std::nextafter(c * c, 0.0)).first, Spin::plus);
}

TEST(split, carries_tau) {
    const BeamSplitter bs(Angle{0.0}, NoRetardation{}, {});
    EXPECT_EQ(split(bs, Photon{Angle{1.0}, 3.5}, 0.5).second.tau_total, 3.5);
}

TEST(split, malus_law) {
    constexpr int kTrials = 100000;
    for (const double delta : {kPi / 3, 0.1, 0.7, 1.2, 2.9}) {
        const BeamSplitter bs(Angle{0.25}, NoRetardation{}, {});
        RandomStream s(static_cast<std::uint64_t>(delta * 1000));
        int plus = 0;
        for (int i = 0; i < kTrials; ++i) {
            plus += split(bs, Photon{Angle{0.25 + delta}}, s).first == Spin::plus;
        }
        const double p = std::cos(delta) * std::cos(delta);
        EXPECT_NEAR(static_cast<double>(plus) / kTrials, p, binomial_band(p, kTrials)) << "delta=" << delta;
    }
}

TEST(retard, none_law_is_zero) {
    BeamSplitter bs(Angle{0.0}, NoRetardation{}, default_params());
    EXPECT_EQ(retard(bs, Photon{Angle{0.7}}, 0.9), 0.0);
    EXPECT_EQ(bs.memory(), (Vec2{0.0, 0.0}));
}

TEST(retard, memoryless_repeat_is_zero) {
    BeamSplitter bs(Angle{0.0}, MemorylessRetardation{}, default_params());
    const Photon photon{Angle{0.7}};
    const double first = retard(bs, photon, 0.9);
    EXPECT_GT(first, 0.0);
    EXPECT_EQ(retard(bs, photon, 0.9), 0.0);
    EXPECT_EQ(retard(bs, photon, 0.3), 0.0);
}

TEST(retard, first_event_transient) {
    // Memory starts at zero: the memory factor is (1/2)^beta.
    BeamSplitter bs(Angle{0.0}, MemorylessRetardation{}, default_params());
    const double phi = 0.3;
    const double expected = 0.6 * 5000.0 * std::pow(std::abs(std::sin(2 * phi)), 4.0) * std::sqrt(0.5);
    EXPECT_NEAR(retard(bs, Photon{Angle{phi}}, 0.6), expected, 1e-9);
}

TEST(retard, aligned_photon_is_zero) {
    for (const RetardationLaw law :
         {RetardationLaw{MemorylessRetardation{}}, RetardationLaw{LearningRetardation{0.5}}}) {
        BeamSplitter bs(Angle{0.9}, law, default_params());
        RandomStream s(5);
        for (int i = 0; i < 100; ++i) {
            retard(bs, Photon{s.uniform_angle()}, s);
            EXPECT_EQ(retard(bs, Photon{Angle{0.9}}, s), 0.0);
        }
    }
}

TEST(retard, memoryless_mean_of_r_prime) {
    BeamSplitter bs(Angle{0.2}, MemorylessRetardation{}, default_params());
    RandomStream s(6);
    double sum = 0.0;
    int used = 0;
    for (int i = 0; i < 100000; ++i) {
        const Photon photon{s.uniform_angle()};
        const UnitVec2 x = unit_vec(photon.phi);
        const Vec2 u = bs.memory();
        const double scale = 5000.0 * std::pow(std::abs(std::sin(2 * (photon.phi.rad - 0.2))), 4.0) *
                             std::sqrt(std::abs((1 - dot(x, u)) / 2));
        const double tau = retard(bs, photon, s);
        ASSERT_GE(tau, 0.0);
        ASSERT_LE(tau, 5000.0);
        if (scale > 1e-9) {
            sum += tau / scale;
            ++used;
        }
    }
    EXPECT_NEAR(sum / used, 0.5, 0.01);
}

TEST(retard, tau_bounded_and_memory_norm_bounded) {
    for (const RetardationLaw law :
         {RetardationLaw{MemorylessRetardation{}}, RetardationLaw{LearningRetardation{0.1}},
          RetardationLaw{LearningRetardation{0.98}}}) {
        BeamSplitter bs(Angle{1.3}, law, default_params());
        RandomStream s(8);
        for (int i = 0; i < 20000; ++i) {
            const double tau = retard(bs, Photon{s.uniform_angle()}, s);
            ASSERT_GE(tau, 0.0);
            ASSERT_LE(tau, 5000.0);
            ASSERT_LE(norm(bs.memory()), 1.0 + 1e-12);
        }
    }
}

TEST(retard, learning_shutoff_is_geometric) {
    const double gamma = 0.8;
    BeamSplitter bs(Angle{0.0}, LearningRetardation{gamma}, default_params());
    bs.set_memory(Vec2{-0.3, 0.5});
    const Angle fixed{1.0};
    const UnitVec2 target = unit_vec(fixed);
    const double initial = norm(bs.memory() - target);
    const double scale = 0.5 * 5000 * std::pow(std::abs(std::sin(2.0)), 4);
    for (int n = 1; n <= 200; ++n) {
        // 1 - |u|^2 <= 2 |x - u|, and the tag is computed before the update.
        const double bound = scale * std::sqrt(std::pow(gamma, n - 1) * initial) + 1e-4;
        EXPECT_LE(retard(bs, Photon{fixed}, 0.5), bound) << n;
        EXPECT_LE(norm(bs.memory() - target), std::pow(gamma, n) * initial + 1e-12);
    }
}

TEST(retard, learning_memory_averages_out_random_input) {
    // With uniformly random input u is an exponentially weighted sum of unit
    // vectors: E|u|^2 -> (1 - gamma)/(1 + gamma) and its long-run average is 0.
    const double gamma = 0.9;
    BeamSplitter bs(Angle{0.0}, LearningRetardation{gamma}, default_params());
    RandomStream s(10);
    Vec2 mean{0.0, 0.0};
    double mean_sq = 0.0;
    constexpr int kEvents = 10000;
    for (int i = 0; i < kEvents; ++i) {
        retard(bs, Photon{s.uniform_angle()}, s);
        mean = mean + (1.0 / kEvents) * bs.memory();
        mean_sq += norm_squared(bs.memory()) / kEvents;
    }
    EXPECT_LT(norm(mean), 0.1);
    EXPECT_NEAR(mean_sq, (1 - gamma) / (1 + gamma), 0.01);
}

TEST(beam_splitter, rejects_bad_gamma) {
    EXPECT_THROW(BeamSplitter(Angle{}, LearningRetardation{1.0}, {}), std::invalid_argument);
    EXPECT_THROW(BeamSplitter(Angle{}, LearningRetardation{0.0}, {}), std::invalid_argument);
}
