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

// Statistical acceptance checks for the simulator. Shared by the `validate`
// subcommand and the acceptance test binary.
//
// Tolerance policy: an estimate built from M effective samples (M = N for K
// moments, M = number of identified pairs for E moments) must lie within
// 5/sqrt(M) of its reference value, and at least 95% of the grid points of
// every curve must lie within 3/sqrt(M).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eeprb/experiment.hpp"
#include "eeprb/io.hpp"
#include "eeprb/oracle.hpp"

namespace eeprb::acceptance {

inline constexpr double kHardSigmas = 5.0;
inline constexpr double kSoftSigmas = 3.0;
inline constexpr double kSoftFraction = 0.95;

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Collects (estimate, reference, M) triples grouped into named curves.
class ToleranceCheck {
   public:
    void add(const std::string &curve, double theta, const std::optional<double> &estimate, double reference,
             double samples) {
        Curve &c = curves_[curve];
        ++c.points;
        if (!estimate || samples <= 0.0) {
            ++c.undefined;
            return;
        }
        const double sigma = 1.0 / std::sqrt(samples);
        const double z = std::abs(*estimate - reference) / sigma;
        if (z <= kHardSigmas) {
            ++c.within_hard;
        }
        if (z <= kSoftSigmas) {
            ++c.within_soft;
        }
        if (z > worst_z_) {
            worst_z_ = z;
            worst_ = curve + " at theta=" + format_number(theta) + " (estimate " + format_number(*estimate) +
                     ", reference " + format_number(reference) + ", M=" + format_number(samples) + ")";
        }
    }

    bool passed() const {
        for (const auto &[name, c] : curves_) {
            if (c.undefined > 0 || c.within_hard < c.points ||
                static_cast<double>(c.within_soft) < kSoftFraction * static_cast<double>(c.points)) {
                return false;
            }
        }
        return !curves_.empty();
    }

    std::string summary() const {
        std::size_t points = 0;
        std::size_t hard = 0;
        std::size_t undefined = 0;
        double min_soft = 1.0;
        std::string min_soft_curve;
        for (const auto &[name, c] : curves_) {
            points += c.points;
            hard += c.within_hard;
            undefined += c.undefined;
            const double frac = static_cast<double>(c.within_soft) / static_cast<double>(c.points);
            if (frac < min_soft) {
                min_soft = frac;
                min_soft_curve = name;
            }
        }
        std::ostringstream os;
        os << hard << "/" << points << " within 5/sqrt(M)";
        if (undefined) {
            os << ", " << undefined << " undefined";
        }
        os << "; lowest 3/sqrt(M) fraction " << format_number(std::round(min_soft * 1000) / 1000);
        if (!min_soft_curve.empty()) {
            os << " (" << min_soft_curve << ")";
        }
        os << "; worst " << format_number(std::round(worst_z_ * 100) / 100) << " sigma: " << worst_;
        return os.str();
    }

   private:
    struct Curve {
        std::size_t points = 0;
        std::size_t within_hard = 0;
        std::size_t within_soft = 0;
        std::size_t undefined = 0;
    };
    std::map<std::string, Curve> curves_;
    double worst_z_ = 0.0;
    std::string worst_;
};

struct Options {
    std::int64_t n_pairs = 1'000'000;
    int grid_points = 25;
    std::uint64_t seed = 20260101;
    /// Path to the command-line tool; needed for the cross-process determinism check.
    std::string cli_path;
    unsigned threads = 0;
};

/// Quantum-regime defaults: T_max = 5000, W = 1, alpha = 4, beta = 1/2.
inline RunConfig quantum_regime(const Options &opt) {
    RunConfig c;
    c.topology = Topology::eeprb;
    c.source = OrthogonalRandom{};
    c.law = MemorylessRetardation{};
    c.retardation = RetardationParams{5000.0, 4.0, 0.5};
    c.identification = LocalWindow{1.0};
    c.n_pairs = opt.n_pairs;
    c.seed = opt.seed;
    return c;
}

class Suite {
   public:
    explicit Suite(Options options) : opt_(std::move(options)) {}

    std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult &)> &report = {}) {
        std::vector<CriterionResult> results;
        const auto record = [&](CriterionResult r) {
            if (report) {
                report(r);
            }
            results.push_back(std::move(r));
        };
        record(maxwell_regime());
        record(quantum_regime_agreement());
        record(pair_ratios());
        record(parallel_regime());
        record(fixed_regime());
        record(learning_law());
        record(eprb_cfd());
        record(single_run_chsh());
        record(efficiency());
        record(oracle_consistency());
        record(determinism());
        return results;
    }

    // 1
    CriterionResult maxwell_regime() {
        RunConfig c = quantum_regime(opt_);
        c.identification = NoIdentification{};
        c.seed = opt_.seed + 1;
        const auto points = sweep(c);
        ToleranceCheck check;
        for (const SweepPoint &p : points) {
            const auto ref = oracle::maxwell_moments(p.settings, kQuarterTurn);
            const double n = static_cast<double>(p.moments.n_pairs());
            for (const MomentMask m : kMomentOrder) {
                check.add("K" + moment_label(m), p.theta, p.moments.K(m), ref[m], n);
            }
        }
        return finish(1, "Maxwell regime (orthogonal source, no identification)", check);
    }

    // 2
    CriterionResult quantum_regime_agreement() {
        const auto &points = quantum_points();
        ToleranceCheck check;
        add_e_moments(check, points, [](const Settings &st) { return oracle::quantum_moments(st); });
        return finish(2, "Quantum regime (memoryless law, W=1)", check);
    }

    // 3
    CriterionResult pair_ratios() {
        struct Band {
            double window;
            double theta;
            double lo;
            double hi;
        };
        const Band bands[] = {
            {1.0, 0.0, 0.09, 0.13},
            {1.0, kPi / 4, 0.0005, 0.0015},
            {8.0, 0.0, 0.16, 0.20},
            {8.0, kPi / 4, 0.006, 0.010},
        };
        bool ok = true;
        std::ostringstream detail;
        for (const Band &band : bands) {
            RunConfig c = quantum_regime(opt_);
            c.identification = LocalWindow{band.window};
            c.settings = SweepGeometry{}.at(band.theta);
            c.seed = opt_.seed + 3;
            const MomentEstimates m = estimate_moments(run(c));
            remember(m);
            const double ratio = m.pair_ratio();
            const bool in_band = ratio >= band.lo && ratio <= band.hi;
            ok = ok && in_band;
            detail << "W=" << format_number(band.window) << " |a-b|=" << format_number(band.theta)
                   << " ratio=" << format_number(ratio) << (in_band ? " ok" : " OUT") << " ["
                   << format_number(band.lo) << "," << format_number(band.hi) << "]; ";
        }
        RunConfig wide = quantum_regime(opt_);
        wide.identification = LocalWindow{8.0};
        wide.seed = opt_.seed + 33;
        ToleranceCheck check;
        add_e_moments(check, sweep(wide), [](const Settings &st) { return oracle::quantum_moments(st); });
        ok = ok && check.passed();
        detail << "W=8 E moments: " << check.summary();
        return {3, "Identified-pair ratios and W=8 agreement", ok, detail.str()};
    }

    // 4
    CriterionResult parallel_regime() {
        RunConfig plain = quantum_regime(opt_);
        plain.source = ParallelRandom{};
        plain.identification = NoIdentification{};
        plain.seed = opt_.seed + 4;
        ToleranceCheck k_check;
        for (const SweepPoint &p : sweep(plain)) {
            const auto ref = oracle::maxwell_moments(p.settings, Angle{0.0});
            const double n = static_cast<double>(p.moments.n_pairs());
            for (const MomentMask m : kPairMoments) {
                k_check.add("K" + moment_label(m), p.theta, p.moments.K(m), ref[m], n);
            }
        }
        RunConfig ident = plain;
        ident.identification = LocalWindow{1.0};
        ident.seed = opt_.seed + 44;
        ToleranceCheck e_check;
        for (const SweepPoint &p : sweep(ident)) {
            const auto ref = oracle::moments_of(oracle::flipped_joint(p.settings));
            const double m_eff = static_cast<double>(p.moments.n_coincident());
            for (const MomentMask m : kPairMoments) {
                e_check.add("E" + moment_label(m), p.theta, p.moments.E(m), ref[m], m_eff);
            }
        }
        const bool singlet_ok = oracle::rho_q_is_density(1.0);
        const bool flipped_rejected = !oracle::rho_q_is_density(-1.0);
        const bool ok = k_check.passed() && e_check.passed() && singlet_ok && flipped_rejected;
        std::ostringstream detail;
        detail << "K vs Maxwell(phi0=0): " << k_check.summary() << " | E vs flipped model: " << e_check.summary()
               << " | rho_q(-1) density: " << (flipped_rejected ? "no" : "YES")
               << ", rho_q(1) density: " << (singlet_ok ? "yes" : "NO");
        return {4, "Parallel-random regime", ok, detail.str()};
    }

    // 5
    CriterionResult fixed_regime() {
        const FixedPolarization fixed{Angle{0.2}, Angle{1.1}};
        ToleranceCheck check;
        int variant = 0;
        for (const IdentificationRule rule : {IdentificationRule{NoIdentification{}}, IdentificationRule{LocalWindow{1.0}}}) {
            RunConfig c = quantum_regime(opt_);
            c.source = fixed;
            c.identification = rule;
            c.seed = opt_.seed + 5 + static_cast<std::uint64_t>(variant);
            const std::string tag = variant == 0 ? "[no ident] " : "[local W=1] ";
            for (const SweepPoint &p : sweep(c)) {
                const auto ref = oracle::moments_of(oracle::product_joint(p.settings, fixed.p, fixed.q));
                const double n = static_cast<double>(p.moments.n_pairs());
                const double m_eff = static_cast<double>(p.moments.n_coincident());
                for (const MomentMask m : kMomentOrder) {
                    check.add(tag + "K" + moment_label(m), p.theta, p.moments.K(m), ref[m], n);
                    check.add(tag + "E" + moment_label(m), p.theta, p.moments.E(m), ref[m], m_eff);
                }
            }
            ++variant;
        }
        return finish(5, "Fixed-polarization regime (p=0.2, q=1.1)", check);
    }

    // 6
    CriterionResult learning_law() {
        bool ok = true;
        std::ostringstream detail;
        std::uint64_t k = 0;
        for (const double gamma : {0.1, 0.5, 0.98}) {
            RunConfig c = quantum_regime(opt_);
            c.law = LearningRetardation{gamma};
            c.seed = opt_.seed + 60 + k++;
            ToleranceCheck check;
            add_e_moments(check, sweep(c), [](const Settings &st) { return oracle::quantum_moments(st); });
            ok = ok && check.passed();
            detail << "gamma=" << format_number(gamma) << (check.passed() ? " pass: " : " FAIL: ") << check.summary()
                   << " | ";
        }
        return {6, "Learning-law robustness", ok, detail.str()};
    }

    // 7
    CriterionResult eprb_cfd() {
        RunConfig c = quantum_regime(opt_);
        c.topology = Topology::eprb;
        c.cfd = true;
        c.seed = opt_.seed + 7;

        const double a = 0.0;
        const double a_prime = kPi / 4;
        const double b = kPi / 8;
        const double b_prime = 3 * kPi / 8;
        double min_samples = 1e300;
        const auto e12 = [&](double x, double y) {
            RunConfig point = c;
            point.settings = Settings{Angle{x}, Angle{y}, Angle{x}, Angle{y}};
            const MomentEstimates m = estimate_moments(run(point));
            min_samples = std::min(min_samples, static_cast<double>(m.n_coincident()));
            return m.E(0b0011);
        };
        const auto e_ab = e12(a, b);
        const auto e_abp = e12(a, b_prime);
        const auto e_apb = e12(a_prime, b);
        const auto e_apbp = e12(a_prime, b_prime);
        bool ok = e_ab && e_abp && e_apb && e_apbp;
        std::ostringstream detail;
        if (ok) {
            const double chsh = chsh_multi_run(*e_ab, *e_abp, *e_apb, *e_apbp);
            const double half_width = kHardSigmas / std::sqrt(min_samples);
            const double target = 2.0 * std::sqrt(2.0);
            ok = std::abs(chsh - target) <= half_width;
            detail << "CHSH=" << format_number(chsh) << " target " << format_number(target) << " +/- "
                   << format_number(half_width) << (ok ? " ok" : " OUT") << "; ";
        } else {
            detail << "undefined E12 in a CHSH run; ";
        }

        RunConfig fresh = c;
        fresh.cfd = false;
        const auto on = sweep(c);
        const auto off = sweep(fresh);
        std::size_t agree = 0;
        std::size_t total = 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < on.size(); ++i) {
            for (const MomentMask m : {0b0001u, 0b0010u, 0b0011u}) {
                ++total;
                const auto x = on[i].moments.E(m);
                const auto y = off[i].moments.E(m);
                const double samples =
                    static_cast<double>(std::min(on[i].moments.n_coincident(), off[i].moments.n_coincident()));
                if (!x || !y || samples <= 0) {
                    continue;
                }
                const double z = std::abs(*x - *y) * std::sqrt(samples);
                worst = std::max(worst, z);
                if (z <= kHardSigmas) {
                    ++agree;
                }
            }
        }
        ok = ok && agree == total;
        detail << "cfd on/off: " << agree << "/" << total << " points within 5/sqrt(M), worst "
               << format_number(std::round(worst * 100) / 100) << " sigma";
        return {7, "EPRB multi-run CHSH and counterfactual-definite mode", ok, detail.str()};
    }

    // 8
    CriterionResult single_run_chsh() {
        // Pick up the runs of the criteria above; make sure at least the quantum sweep exists.
        quantum_points();
        std::size_t checked = 0;
        std::size_t violations = 0;
        double largest = 0.0;
        for (const MomentEstimates &m : extended_runs_) {
            const ChshValue v = chsh_single_run(m);
            ++checked;
            largest = std::max(largest, std::abs(v.k));
            if (std::abs(v.k) > 2.0) {
                ++violations;
            }
            if (v.e) {
                largest = std::max(largest, std::abs(*v.e));
                if (std::abs(*v.e) > 2.0) {
                    ++violations;
                }
            }
        }
        std::ostringstream detail;
        detail << checked << " extended runs, " << violations << " violations, largest |CHSH| "
               << format_number(largest);
        return {8, "Single-run EEPRB CHSH bound", violations == 0 && checked > 0, detail.str()};
    }

    // 9
    CriterionResult efficiency() {
        RunConfig c = quantum_regime(opt_);
        c.eta = 0.5;
        c.seed = opt_.seed + 2;
        const auto &full = quantum_points();
        const auto thinned = sweep(c);
        ToleranceCheck check;
        add_e_moments(check, thinned, [](const Settings &st) { return oracle::quantum_moments(st); }, true);
        std::size_t scaled_ok = 0;
        double lo = 1e300;
        double hi = 0.0;
        for (std::size_t i = 0; i < thinned.size(); ++i) {
            const double ratio = static_cast<double>(thinned[i].moments.n_coincident()) /
                                 static_cast<double>(std::max<std::int64_t>(1, full[i].moments.n_coincident()));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            if (std::abs(ratio - 0.25) <= 0.2 * 0.25) {
                ++scaled_ok;
            }
        }
        const bool ok = check.passed() && scaled_ok == thinned.size();
        std::ostringstream detail;
        detail << "E_ij at eta=0.5: " << check.summary() << " | coincidence scaling " << scaled_ok << "/"
               << thinned.size() << " within 0.25 +/- 20% (range " << format_number(lo) << ".." << format_number(hi)
               << ")";
        return {9, "Detection efficiency eta=0.5", ok, detail.str()};
    }

    // 10
    CriterionResult oracle_consistency() {
        RandomStream rng(opt_.seed + 10);
        const auto random_settings = [&] {
            return Settings{rng.uniform_angle(), rng.uniform_angle(), rng.uniform_angle(), rng.uniform_angle()};
        };
        double trace_dev = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Settings st = random_settings();
            const auto closed = oracle::quantum_joint(st);
            const auto traced = oracle::quantum_joint_trace(st);
            for (unsigned k = 0; k < 16; ++k) {
                trace_dev = std::max(trace_dev, std::abs(closed.weight[k] - traced.weight[k]));
            }
        }

        double quad_dev = 0.0;
        constexpr int kNodes = 10000;
        for (int i = 0; i < 10; ++i) {
            const Settings st = random_settings();
            for (const Angle phi0 : {Angle{0.0}, kQuarterTurn, rng.uniform_angle()}) {
                for (const int s1 : {1, -1}) {
                    for (const int s2 : {1, -1}) {
                        double sum = 0.0;
                        for (int j = 0; j < kNodes; ++j) {
                            const Angle phi{2.0 * kPi * (j + 0.5) / kNodes};
                            sum += oracle::maxwell_integrand(s1, s2, st.a, st.b, phi, phi0);
                        }
                        quad_dev = std::max(quad_dev, std::abs(sum / kNodes - oracle::maxwell_pair(s1, s2, st.a, st.b, phi0)));
                    }
                }
            }
        }

        const bool boundary_ok = oracle::rho_q_is_density(-1.0 / 3.0 + 1e-6) &&
                                 !oracle::rho_q_is_density(-1.0 / 3.0 - 1e-6) &&
                                 oracle::rho_q_is_density(1.0 - 1e-6) && !oracle::rho_q_is_density(1.0 + 1e-6);

        std::size_t bell_violations = 0;
        const auto chsh = oracle::bell_chsh();
        const auto triangle = oracle::bell_triangle();
        for (int i = 0; i < 200; ++i) {
            const auto dist = oracle::quantum_joint(random_settings());
            for (const auto *g : {&chsh, &triangle}) {
                const double v = oracle::bell_functional(dist, g->g);
                if (v < g->lower - 1e-12 || v > g->upper + 1e-12) {
                    ++bell_violations;
                }
            }
        }

        const bool ok = trace_dev <= 1e-12 && quad_dev <= 1e-6 && boundary_ok && bell_violations == 0;
        std::ostringstream detail;
        detail << "trace vs closed form max dev " << format_number(trace_dev) << "; quadrature max dev "
               << format_number(quad_dev) << "; rho_q boundaries " << (boundary_ok ? "ok" : "WRONG")
               << "; Bell functional violations " << bell_violations << "/400";
        return {10, "Oracle self-consistency", ok, detail.str()};
    }

    // 11
    CriterionResult determinism() {
        SweepSpec spec;
        spec.base = quantum_regime(opt_);
        spec.base.n_pairs = 20000;
        spec.base.seed = opt_.seed + 11;
        spec.grid_points = 5;
        const std::string first = sweep_csv(spec, opt_.threads);
        const std::string second = sweep_csv(spec, opt_.threads);
        bool ok = first == second;
        std::ostringstream detail;
        detail << "in-process " << (ok ? "identical" : "DIFFERENT");

        if (opt_.cli_path.empty()) {
            ok = false;
            detail << "; cross-process check skipped: no CLI path";
        } else {
            namespace fs = std::filesystem;
            const fs::path dir = fs::temp_directory_path() / ("eeprb_determinism_" + std::to_string(spec.base.seed));
            fs::create_directories(dir);
            std::vector<std::string> outputs;
            for (int i = 0; i < 2; ++i) {
                const fs::path out = dir / ("run" + std::to_string(i) + ".csv");
                const std::string cmd = "\"" + opt_.cli_path + "\" sweep --pairs 20000 --grid-points 5 --seed " +
                                        std::to_string(spec.base.seed) + " --out \"" + out.string() + "\" 2>/dev/null";
                if (std::system(cmd.c_str()) != 0) {
                    outputs.emplace_back();
                    continue;
                }
                std::ifstream in(out, std::ios::binary);
                outputs.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
            }
            fs::remove_all(dir);
            const bool processes_equal = !outputs[0].empty() && outputs[0] == outputs[1];
            const bool matches_library = processes_equal && outputs[0] == first;
            ok = ok && processes_equal && matches_library;
            detail << "; two processes " << (processes_equal ? "identical" : "DIFFERENT") << "; CLI vs library "
                   << (matches_library ? "identical" : "DIFFERENT");
        }
        return {11, "Determinism", ok, detail.str()};
    }

   private:
    std::vector<SweepPoint> sweep(const RunConfig &config) {
        const auto grid = theta_grid(opt_.grid_points, kPi);
        auto points = run_sweep(config, grid, SweepGeometry{}, opt_.threads);
        for (const SweepPoint &p : points) {
            remember(p.moments);
        }
        return points;
    }

    void remember(const MomentEstimates &m) {
        if (m.topology() == Topology::eeprb) {
            extended_runs_.push_back(m);
        }
    }

    const std::vector<SweepPoint> &quantum_points() {
        if (!quantum_points_) {
            RunConfig c = quantum_regime(opt_);
            c.seed = opt_.seed + 2;
            quantum_points_ = sweep(c);
        }
        return *quantum_points_;
    }

    /// All fifteen E moments against the given closed form (zero where the table is empty).
    template <class Reference>
    static void add_e_moments(ToleranceCheck &check, const std::vector<SweepPoint> &points, Reference &&reference,
                              bool pairs_only = false) {
        for (const SweepPoint &p : points) {
            const auto ref = reference(p.settings);
            const double m_eff = static_cast<double>(p.moments.n_coincident());
            for (const MomentMask m : kMomentOrder) {
                if (pairs_only && moment_order(m) != 2) {
                    continue;
                }
                check.add("E" + moment_label(m), p.theta, p.moments.E(m), ref[m], m_eff);
            }
        }
    }

    static CriterionResult finish(int id, std::string name, const ToleranceCheck &check) {
        return {id, std::move(name), check.passed(), check.summary()};
    }

    Options opt_;
    std::optional<std::vector<SweepPoint>> quantum_points_;
    std::vector<MomentEstimates> extended_runs_;
};

inline std::string format_result(const CriterionResult &r) {
    char head[64];
    std::snprintf(head, sizeof(head), "[%s] criterion %2d: ", r.passed ? "PASS" : "FAIL", r.id);
    return head + r.name + " -- " + r.detail;
}

}  // namespace eeprb::acceptance
