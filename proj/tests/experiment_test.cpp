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


#include <algorithm>
#include <cmath>
#include <numeric>

#include "gtest/gtest.h"

#include "eeprb/experiment.hpp"

using namespace eeprb;

namespace {

Dataset make_dataset(const std::vector<std::array<int, 4>> &rows, const std::vector<int> &w1 = {},
                     const std::vector<int> &w2 = {}) {
    Dataset ds;
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const auto &s = rows[n];
        ds.station1.push_back({static_cast<std::int8_t>(s[0]), static_cast<std::int8_t>(s[2]),
                               static_cast<std::uint8_t>(w1.empty() ? 1 : w1[n])});
        ds.station2.push_back({static_cast<std::int8_t>(s[1]), static_cast<std::int8_t>(s[3]),
                               static_cast<std::uint8_t>(w2.empty() ? 1 : w2[n])});
    }
    return ds;
}

/// Direct average of the product over the selected rows; independent of the
/// mask-based accumulation in estimate_moments.
double brute_moment(const Dataset &ds, const std::string &label, bool weighted) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 0; n < ds.size(); ++n) {
        const int s[5] = {0, ds.station1[n].s_first, ds.station2[n].s_first, ds.station1[n].s_second,
                          ds.station2[n].s_second};
        double prod = 1.0;
        for (const char c : label) {
            prod *= s[c - '0'];
        }
        const double w = weighted ? ds.station1[n].w * ds.station2[n].w : 1.0;
        num += w * prod;
        den += w;
    }
    return num / den;
}

Dataset random_dataset(std::uint64_t seed, std::size_t n) {
    RandomStream s(seed);
    std::vector<std::array<int, 4>> rows;
    std::vector<int> w1;
    std::vector<int> w2;
    for (std::size_t i = 0; i < n; ++i) {
        std::array<int, 4> r;
        for (int &v : r) {
            v = s.uniform() < 0.5 ? 1 : -1;
        }
        rows.push_back(r);
        w1.push_back(s.uniform() < 0.7);
        w2.push_back(s.uniform() < 0.7);
    }
    return make_dataset(rows, w1, w2);
}

const std::vector<std::array<int, 4>> kHandRows = {
    {+1, +1, +1, +1},
    {+1, -1, -1, +1},
    {-1, +1, +1, -1},
    {-1, -1, -1, -1},
};

}  // namespace

TEST(moment_labels, roundtrip) {
    for (const MomentMask m : kMomentOrder) {
        EXPECT_EQ(moment_mask(moment_label(m)), m);
    }
    EXPECT_EQ(moment_label(0b1111), "1234");
    EXPECT_THROW(moment_mask("15"), std::invalid_argument);
}

TEST(estimate_moments, hand_dataset) {
    // Enumerated by hand over the four rows (S1, S2, S3, S4).
    const MomentEstimates m = estimate_moments(make_dataset(kHandRows));
    const std::map<std::string, double> expected = {
        {"1", 0}, {"2", 0}, {"3", 0}, {"4", 0},  {"12", 0},  {"13", 0},  {"14", 1},   {"23", 1},
        {"24", 0}, {"34", 0}, {"123", 0}, {"124", 0}, {"134", 0}, {"234", 0}, {"1234", 1},
    };
    for (const auto &[label, value] : expected) {
        EXPECT_EQ(m.K(label), value) << label;
        EXPECT_EQ(m.E(label), value) << label;
    }
    EXPECT_EQ(m.n_coincident(), 4);
}

TEST(estimate_moments, hand_dataset_single_surviving_row) {
    const MomentEstimates m = estimate_moments(make_dataset(kHandRows, {1, 1, 0, 0}, {1, 0, 1, 1}));
    EXPECT_EQ(m.n_coincident(), 1);
    EXPECT_EQ(m.E("12"), 1.0);
    for (const MomentMask mask : kMomentOrder) {
        EXPECT_EQ(m.E(mask), 1.0);
    }
    EXPECT_EQ(m.K("12"), 0.0);
}

TEST(estimate_moments, no_coincidences_means_undefined) {
    const MomentEstimates m = estimate_moments(make_dataset(kHandRows, {0, 0, 0, 0}, {1, 1, 1, 1}));
    EXPECT_EQ(m.n_coincident(), 0);
    EXPECT_FALSE(m.E("12").has_value());
    EXPECT_TRUE(m.K("12").has_value());
    EXPECT_FALSE(chsh_single_run(m).e.has_value());
}

TEST(estimate_moments, matches_brute_force) {
    const Dataset ds = random_dataset(21, 5000);
    const MomentEstimates m = estimate_moments(ds);
    for (const MomentMask mask : kMomentOrder) {
        const std::string label = moment_label(mask);
        EXPECT_NEAR(*m.K(mask), brute_moment(ds, label, false), 1e-12) << label;
        EXPECT_NEAR(*m.E(mask), brute_moment(ds, label, true), 1e-12) << label;
        EXPECT_LE(std::abs(*m.K(mask)), 1.0);
        EXPECT_LE(std::abs(*m.E(mask)), 1.0);
    }
    EXPECT_LE(m.n_coincident(), m.n_pairs());
}

TEST(estimate_moments, permutation_invariant) {
    Dataset ds = random_dataset(22, 3000);
    const MomentEstimates before = estimate_moments(ds);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    RandomStream s(23);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[static_cast<std::size_t>(s.uniform() * (i + 1))]);
    }
    Dataset shuffled;
    for (const std::size_t i : order) {
        shuffled.station1.push_back(ds.station1[i]);
        shuffled.station2.push_back(ds.station2[i]);
    }
    const MomentEstimates after = estimate_moments(shuffled);
    for (const MomentMask mask : kMomentOrder) {
        EXPECT_EQ(before.K(mask), after.K(mask));
        EXPECT_EQ(before.E(mask), after.E(mask));
    }
}

TEST(estimate_moments, eprb_has_no_second_stage) {
    RunConfig c;
    c.topology = Topology::eprb;
    c.n_pairs = 1000;
    const MomentEstimates m = estimate_moments(run(c));
    EXPECT_TRUE(m.K("12").has_value());
    EXPECT_FALSE(m.K("13").has_value());
    EXPECT_FALSE(m.E("1234").has_value());
    EXPECT_THROW(chsh_single_run(m), std::invalid_argument);
}

TEST(chsh, per_event_identity) {
    for (unsigned k = 0; k < 16; ++k) {
        const int s1 = (k & 1) ? -1 : 1;
        const int s2 = (k & 2) ? -1 : 1;
        const int s3 = (k & 4) ? -1 : 1;
        const int s4 = (k & 8) ? -1 : 1;
        EXPECT_EQ(std::abs(s1 * s3 + s1 * s4 + s2 * s3 - s2 * s4), 2);
    }
}

TEST(chsh, identical_rows) {
    const MomentEstimates m = estimate_moments(make_dataset({{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}}));
    EXPECT_EQ(chsh_single_run(m).k, 2.0);
    EXPECT_EQ(chsh_single_run(m).e, 2.0);
}

TEST(chsh, single_run_bounded_for_any_dataset) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const MomentEstimates m = estimate_moments(random_dataset(100 + seed, 1 + seed * 37));
        const ChshValue v = chsh_single_run(m);
        EXPECT_LE(std::abs(v.k), 2.0);
        if (v.e) {
            EXPECT_LE(std::abs(*v.e), 2.0);
        }
    }
}

TEST(chsh, multi_run_values) {
    EXPECT_EQ(chsh_multi_run(0, 0, 0, 0), 0.0);
    const double a = 0;
    const double ap = kPi / 4;
    const double b = kPi / 8;
    const double bp = 3 * kPi / 8;
    const auto quantum = [](double x, double y) { return -std::cos(2 * (x - y)); };
    const auto maxwell = [](double x, double y) { return -0.5 * std::cos(2 * (x - y)); };
    EXPECT_NEAR(chsh_multi_run(quantum(a, b), quantum(a, bp), quantum(ap, b), quantum(ap, bp)), 2 * std::sqrt(2.0),
                1e-12);
    EXPECT_NEAR(chsh_multi_run(maxwell(a, b), maxwell(a, bp), maxwell(ap, b), maxwell(ap, bp)), std::sqrt(2.0),
                1e-12);
}

TEST(run, no_identification_keeps_everything) {
    RunConfig c;
    c.law = NoRetardation{};
    c.identification = NoIdentification{};
    c.n_pairs = 5000;
    const Dataset ds = run(c);
    ASSERT_EQ(ds.station1.size(), 5000u);
    ASSERT_EQ(ds.station2.size(), 5000u);
    for (std::size_t n = 0; n < ds.size(); ++n) {
        for (const StationRecord &r : {ds.station1[n], ds.station2[n]}) {
            EXPECT_EQ(r.w, 1);
            EXPECT_TRUE(r.s_first == 1 || r.s_first == -1);
            EXPECT_TRUE(r.s_second == 1 || r.s_second == -1);
        }
    }
}

TEST(run, deterministic) {
    RunConfig c;
    c.n_pairs = 50000;
    c.seed = 99;
    EXPECT_EQ(run(c), run(c));
    RunConfig other = c;
    other.seed = 100;
    EXPECT_NE(run(c), run(other));
}

TEST(run, validates_config) {
    RunConfig c;
    c.n_pairs = 0;
    EXPECT_THROW(run(c), std::invalid_argument);
    c.n_pairs = 10;
    c.eta = 1.5;
    EXPECT_THROW(run(c), std::invalid_argument);
    c.eta = 1.0;
    c.identification = LocalWindow{-1.0};
    EXPECT_THROW(run(c), std::invalid_argument);
}

TEST(run, single_averages_vanish) {
    RunConfig c;
    c.law = NoRetardation{};
    c.identification = NoIdentification{};
    c.n_pairs = 1'000'000;
    c.seed = 31;
    c.settings = Settings{Angle{0.3}, Angle{0.0}, Angle{0.3 + kPi / 6}, Angle{kPi / 3}};
    const MomentEstimates m = estimate_moments(run(c));
    for (const char *label : {"1", "2", "3", "4"}) {
        EXPECT_LT(std::abs(*m.K(label)), 0.005) << label;
    }
}

TEST(run, efficiency_thinning_keeps_alignment) {
    // Same seed: the efficiency stage only clears w, never changes outcomes.
    RunConfig full;
    full.n_pairs = 20000;
    full.seed = 41;
    RunConfig thinned = full;
    thinned.eta = 0.5;
    const Dataset a = run(full);
    const Dataset b = run(thinned);
    for (std::size_t n = 0; n < a.size(); ++n) {
        ASSERT_EQ(a.station1[n].s_first, b.station1[n].s_first);
        ASSERT_EQ(a.station2[n].s_second, b.station2[n].s_second);
        ASSERT_LE(b.station1[n].w, a.station1[n].w);
    }
}

TEST(run, coincidence_close_to_local_window) {
    RunConfig local;
    local.n_pairs = 400000;
    local.seed = 51;
    RunConfig coinc = local;
    coinc.identification = CoincidenceWindow{1.0};
    for (const double theta : {0.0, kPi / 6, kPi / 3}) {
        local.settings = coinc.settings = SweepGeometry{}.at(theta);
        const MomentEstimates a = estimate_moments(run(local));
        const MomentEstimates b = estimate_moments(run(coinc));
        const double m = static_cast<double>(std::min(a.n_coincident(), b.n_coincident()));
        // Both rules carry a finite-window bias of order 0.02 at W = 1.
        for (const MomentMask mask : kPairMoments) {
            EXPECT_NEAR(*a.E(mask), *b.E(mask), 5 / std::sqrt(m) + 0.02) << "theta=" << theta << " E" << moment_label(mask);
        }
    }
}

TEST(run_sweep, grid_shape) {
    const auto grid = theta_grid(25, kPi);
    ASSERT_EQ(grid.size(), 25u);
    EXPECT_EQ(grid.front(), 0.0);
    EXPECT_EQ(grid.back(), kPi);
    EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
    EXPECT_THROW(theta_grid(0, kPi), std::invalid_argument);

    RunConfig c;
    c.n_pairs = 200;
    const auto points = run_sweep(c, grid, SweepGeometry{});
    ASSERT_EQ(points.size(), 25u);
    for (std::size_t i = 1; i < points.size(); ++i) {
        EXPECT_GT(points[i].theta, points[i - 1].theta);
    }
    EXPECT_THROW(run_sweep(c, std::vector<double>{}, SweepGeometry{}), std::invalid_argument);
}

TEST(run_sweep, geometry) {
    const Settings s = SweepGeometry{}.at(0.5);
    EXPECT_EQ(s.b.rad, 0.0);
    EXPECT_EQ(s.a.rad, 0.5);
    EXPECT_DOUBLE_EQ(s.c.rad, 0.5 + kPi / 6);
    EXPECT_DOUBLE_EQ(s.d.rad, kPi / 3);
}

TEST(run_sweep, single_point_equals_direct_run) {
    RunConfig c;
    c.n_pairs = 30000;
    c.seed = 61;
    c.cfd = true;
    const std::vector<double> grid = {0.0};
    const auto points = run_sweep(c, grid, SweepGeometry{});
    RunConfig direct = c;
    direct.settings = SweepGeometry{}.at(0.0);
    const MomentEstimates m = estimate_moments(run(direct));
    for (const MomentMask mask : kMomentOrder) {
        EXPECT_EQ(points[0].moments.E(mask), m.E(mask));
        EXPECT_EQ(points[0].moments.K(mask), m.K(mask));
    }
}

TEST(run_sweep, thread_count_does_not_matter) {
    RunConfig c;
    c.n_pairs = 5000;
    const auto grid = theta_grid(7, kPi);
    const auto one = run_sweep(c, grid, SweepGeometry{}, 1);
    const auto many = run_sweep(c, grid, SweepGeometry{}, 4);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(one[i].seed, many[i].seed);
        EXPECT_EQ(one[i].moments.E(0b0011), many[i].moments.E(0b0011));
    }
}

TEST(run_sweep, cfd_and_fresh_streams_agree) {
    RunConfig c;
    c.n_pairs = 300000;
    c.seed = 71;
    c.cfd = true;
    RunConfig fresh = c;
    fresh.cfd = false;
    const auto grid = theta_grid(5, kPi);
    const auto on = run_sweep(c, grid, SweepGeometry{});
    const auto off = run_sweep(fresh, grid, SweepGeometry{});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(on[i].seed, 71u);
        const double m = static_cast<double>(std::min(on[i].moments.n_coincident(), off[i].moments.n_coincident()));
        EXPECT_NEAR(*on[i].moments.E(0b0011), *off[i].moments.E(0b0011), 5 / std::sqrt(m));
    }
}
