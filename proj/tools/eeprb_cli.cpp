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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "eeprb/acceptance.hpp"
#include "eeprb/eeprb.hpp"

namespace {

using namespace eeprb;

enum class Exit : int { ok = 0, usage = 1, acceptance = 2 };

/// Radians, or degrees with a "deg:" prefix.
double parse_angle(const std::string &text) {
    constexpr std::string_view kDeg = "deg:";
    std::size_t used = 0;
    if (text.rfind(kDeg, 0) == 0) {
        const std::string rest = text.substr(kDeg.size());
        const double v = std::stod(rest, &used);
        if (used != rest.size()) {
            throw std::invalid_argument("bad angle '" + text + "'");
        }
        return Angle::degrees(v).rad;
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) {
        throw std::invalid_argument("bad angle '" + text + "'");
    }
    return v;
}

struct Flags {
    std::string topology = "eeprb";
    std::string source = "orthogonal";
    std::optional<std::string> p;
    std::optional<std::string> q;
    std::string law = "memoryless";
    std::optional<double> gamma;
    double tmax = 5000.0;
    double alpha = 4.0;
    double beta = 0.5;
    std::optional<double> window;
    std::string ident = "local";
    double eta = 1.0;
    std::int64_t pairs = 1'000'000;
    std::uint64_t seed = 1;
    bool cfd = false;
    int grid_points = 25;
    std::string theta_max = "3.141592653589793";
    std::string theta = "0";
    std::string b = "0";
    std::string c_offset = "0.5235987755982988";
    std::string d = "1.0471975511965976";
    std::string out;
    std::string format = "csv";
    unsigned threads = 0;
};

void add_model_flags(CLI::App &cmd, Flags &f) {
    cmd.add_option("--topology", f.topology, "eprb or eeprb")->check(CLI::IsMember({"eprb", "eeprb"}));
    cmd.add_option("--source", f.source, "orthogonal, parallel or fixed")
        ->check(CLI::IsMember({"orthogonal", "parallel", "fixed"}));
    cmd.add_option("--p", f.p, "fixed polarization of photon 1 (radians or deg:X)");
    cmd.add_option("--q", f.q, "fixed polarization of photon 2 (radians or deg:X)");
    cmd.add_option("--law", f.law, "none, memoryless or learning")
        ->check(CLI::IsMember({"none", "memoryless", "learning"}));
    cmd.add_option("--gamma", f.gamma, "learning rate in (0,1); requires --law learning");
    cmd.add_option("--tmax", f.tmax, "maximum retardation")->capture_default_str();
    cmd.add_option("--alpha", f.alpha, "exponent of |sin 2(phi-a)|")->capture_default_str();
    cmd.add_option("--beta", f.beta, "exponent of the memory factor")->capture_default_str();
    cmd.add_option("--window", f.window, "identification time window W (default 1)");
    cmd.add_option("--ident", f.ident, "local, coincidence or none")
        ->check(CLI::IsMember({"local", "coincidence", "none"}));
    cmd.add_option("--eta", f.eta, "detection efficiency")->capture_default_str();
    cmd.add_option("--pairs", f.pairs, "emitted pairs per setting")->capture_default_str();
    cmd.add_option("--seed", f.seed, "64-bit seed")->capture_default_str();
    cmd.add_flag("--cfd", f.cfd, "replay the same random stream for every setting");
    cmd.add_option("--b", f.b, "orientation b")->capture_default_str();
    cmd.add_option("--c-offset", f.c_offset, "c - a")->capture_default_str();
    cmd.add_option("--d", f.d, "orientation d")->capture_default_str();
    cmd.add_option("--out", f.out, "output file (default stdout)");
    cmd.add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd.add_option("--threads", f.threads, "worker threads for grid points (0 = all cores)");
}

void add_grid_flags(CLI::App &cmd, Flags &f) {
    cmd.add_option("--grid-points", f.grid_points, "number of theta values")->capture_default_str();
    cmd.add_option("--theta-max", f.theta_max, "largest theta (grid starts at 0)")->capture_default_str();
}

SweepSpec resolve(const Flags &f) {
    SweepSpec spec;
    RunConfig &c = spec.base;
    c.topology = f.topology == "eprb" ? Topology::eprb : Topology::eeprb;

    if (f.source == "fixed") {
        if (!f.p || !f.q) {
            throw std::invalid_argument("--source fixed requires --p and --q");
        }
        c.source = FixedPolarization{Angle{parse_angle(*f.p)}, Angle{parse_angle(*f.q)}};
    } else {
        if (f.p || f.q) {
            throw std::invalid_argument("--p/--q are only valid with --source fixed");
        }
        c.source = f.source == "parallel" ? PolarizationMode{ParallelRandom{}} : PolarizationMode{OrthogonalRandom{}};
    }

    if (f.law == "learning") {
        c.law = LearningRetardation{f.gamma.value_or(0.9)};
    } else {
        if (f.gamma) {
            throw std::invalid_argument("--gamma requires --law learning");
        }
        c.law = f.law == "none" ? RetardationLaw{NoRetardation{}} : RetardationLaw{MemorylessRetardation{}};
    }
    c.retardation = RetardationParams{f.tmax, f.alpha, f.beta};

    if (f.ident == "none") {
        if (f.window) {
            throw std::invalid_argument("--window has no effect with --ident none");
        }
        c.identification = NoIdentification{};
    } else if (f.ident == "coincidence") {
        c.identification = CoincidenceWindow{f.window.value_or(1.0)};
    } else {
        c.identification = LocalWindow{f.window.value_or(1.0)};
    }

    c.eta = f.eta;
    c.n_pairs = f.pairs;
    c.seed = f.seed;
    c.cfd = f.cfd;
    spec.grid_points = f.grid_points;
    spec.theta_max = parse_angle(f.theta_max);
    spec.geometry = SweepGeometry{Angle{parse_angle(f.b)}, Angle{parse_angle(f.c_offset)}, Angle{parse_angle(f.d)}};
    validate(c);
    if (spec.grid_points < 1) {
        throw std::invalid_argument("--grid-points must be at least 1");
    }
    return spec;
}

/// Opens the destination before any work is done so an unwritable path fails fast.
class Sink {
   public:
    explicit Sink(const std::string &path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) {
                throw std::runtime_error("cannot write to '" + path + "'");
            }
        }
    }
    std::ostream &stream() { return file_.is_open() ? static_cast<std::ostream &>(file_) : std::cout; }

   private:
    std::ofstream file_;
};

void emit(Sink &sink, const Flags &f, std::string_view command, const SweepSpec &spec,
          const std::vector<OutputRow> &rows, bool with_simulation) {
    if (f.format == "json") {
        write_json(sink.stream(), command, spec, rows, with_simulation);
    } else {
        write_csv(sink.stream(), command, spec, rows, with_simulation);
    }
    sink.stream().flush();
}

void print_summary(const std::vector<OutputRow> &rows, const RunConfig &config) {
    const bool identified = !std::holds_alternative<NoIdentification>(config.identification);
    const char *label = identified ? "E12" : "K12";
    std::fprintf(stderr, "%10s %12s %12s %10s\n", "theta", label, "model", "ratio");
    for (const OutputRow &row : rows) {
        const auto &sim = identified ? row.e[4] : row.k[4];
        const auto &ref = identified ? row.e_hat[4] : row.k_hat[4];
        std::fprintf(stderr, "%10.5f %12s %12.6f %10.6f\n", row.theta, format_optional(sim).c_str(), ref.value_or(0),
                     row.pair_ratio);
    }
}

std::string self_path(const char *argv0) {
    std::error_code ec;
    const auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
    return ec ? std::string(argv0) : p.string();
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Event-by-event simulation of EPRB and extended EPRB experiments"};
    app.set_version_flag("--version", std::string(eeprb::kVersion));
    app.require_subcommand(1);

    Flags run_flags;
    Flags sweep_flags;
    Flags oracle_flags;
    auto *run_cmd = app.add_subcommand("run", "simulate a single setting");
    add_model_flags(*run_cmd, run_flags);
    run_cmd->add_option("--theta", run_flags.theta, "a - b (a = b + theta)")->capture_default_str();

    auto *sweep_cmd = app.add_subcommand("sweep", "simulate a grid of theta = a - b");
    add_model_flags(*sweep_cmd, sweep_flags);
    add_grid_flags(*sweep_cmd, sweep_flags);

    auto *oracle_cmd = app.add_subcommand("oracle", "print the reference curves only");
    add_model_flags(*oracle_cmd, oracle_flags);
    add_grid_flags(*oracle_cmd, oracle_flags);

    eeprb::acceptance::Options accept;
    auto *validate_cmd = app.add_subcommand("validate", "run the acceptance suite");
    validate_cmd->add_option("--seed", accept.seed, "base seed")->capture_default_str();
    validate_cmd->add_option("--pairs", accept.n_pairs, "pairs per setting")->capture_default_str();
    validate_cmd->add_option("--grid-points", accept.grid_points, "theta grid size")->capture_default_str();
    validate_cmd->add_option("--threads", accept.threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return static_cast<int>(Exit::usage);
    }

    try {
        if (*validate_cmd) {
            accept.cli_path = self_path(argv[0]);
            eeprb::acceptance::Suite suite(accept);
            bool all = true;
            suite.run_all([&](const eeprb::acceptance::CriterionResult &r) {
                all = all && r.passed;
                std::printf("%s\n", eeprb::acceptance::format_result(r).c_str());
                std::fflush(stdout);
            });
            return static_cast<int>(all ? Exit::ok : Exit::acceptance);
        }

        if (*run_cmd) {
            const SweepSpec spec = resolve(run_flags);
            Sink sink(run_flags.out);
            const double theta = parse_angle(run_flags.theta);
            RunConfig config = spec.base;
            SweepPoint point;
            point.theta = theta;
            point.settings = spec.geometry.at(theta);
            point.seed = config.seed;
            config.settings = point.settings;
            point.moments = estimate_moments(run(config));
            const std::vector<OutputRow> rows = {make_row(point, spec.base)};
            emit(sink, run_flags, "run", spec, rows, true);
            print_summary(rows, spec.base);
            return 0;
        }

        if (*sweep_cmd) {
            const SweepSpec spec = resolve(sweep_flags);
            Sink sink(sweep_flags.out);
            const auto rows = sweep_rows(spec, sweep_flags.threads);
            emit(sink, sweep_flags, "sweep", spec, rows, true);
            print_summary(rows, spec.base);
            return 0;
        }

        const SweepSpec spec = resolve(oracle_flags);
        Sink sink(oracle_flags.out);
        std::vector<OutputRow> rows;
        for (const double theta : theta_grid(spec.grid_points, spec.theta_max)) {
            rows.push_back(oracle_row(theta, spec.geometry.at(theta), spec.base));
        }
        emit(sink, oracle_flags, "oracle", spec, rows, false);
        return 0;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(Exit::usage);
    }
}
