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

#include <charconv>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "eeprb/experiment.hpp"
#include "eeprb/oracle.hpp"
#include "eeprb/random.hpp"

namespace eeprb {

inline constexpr std::string_view kVersion = "1.0.0";

/// A full sweep request: base configuration plus grid and geometry.
struct SweepSpec {
    RunConfig base;
    int grid_points = 25;
    double theta_max = kPi;
    SweepGeometry geometry;
};

// ---------------------------------------------------------------------------
// Formatting

/// Shortest round-trip decimal form; independent of the global locale.
inline std::string format_number(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buf, end);
}

inline std::string format_optional(const std::optional<double> &v) { return v ? format_number(*v) : "NA"; }

inline std::string_view topology_name(Topology t) { return t == Topology::eprb ? "eprb" : "eeprb"; }

inline std::string source_name(const PolarizationMode &m) {
    if (std::holds_alternative<OrthogonalRandom>(m)) {
        return "orthogonal";
    }
    if (std::holds_alternative<ParallelRandom>(m)) {
        return "parallel";
    }
    return "fixed";
}

inline std::string law_name(const RetardationLaw &law) {
    if (std::holds_alternative<NoRetardation>(law)) {
        return "none";
    }
    if (std::holds_alternative<MemorylessRetardation>(law)) {
        return "memoryless";
    }
    return "learning";
}

inline std::string ident_name(const IdentificationRule &rule) {
    if (std::holds_alternative<LocalWindow>(rule)) {
        return "local";
    }
    if (std::holds_alternative<CoincidenceWindow>(rule)) {
        return "coincidence";
    }
    return "none";
}

inline double ident_window(const IdentificationRule &rule) {
    if (const auto *l = std::get_if<LocalWindow>(&rule)) {
        return l->window;
    }
    if (const auto *c = std::get_if<CoincidenceWindow>(&rule)) {
        return c->window;
    }
    return 0.0;
}

/// Every resolved parameter as ordered key/value pairs.
inline std::vector<std::pair<std::string, std::string>> describe(const SweepSpec &spec) {
    const RunConfig &c = spec.base;
    std::vector<std::pair<std::string, std::string>> kv = {
        {"topology", std::string(topology_name(c.topology))},
        {"source", source_name(c.source)},
    };
    if (const auto *fixed = std::get_if<FixedPolarization>(&c.source)) {
        kv.emplace_back("p", format_number(fixed->p.rad));
        kv.emplace_back("q", format_number(fixed->q.rad));
    }
    kv.emplace_back("law", law_name(c.law));
    if (const auto *learning = std::get_if<LearningRetardation>(&c.law)) {
        kv.emplace_back("gamma", format_number(learning->gamma));
    }
    kv.emplace_back("tmax", format_number(c.retardation.t_max));
    kv.emplace_back("alpha", format_number(c.retardation.alpha));
    kv.emplace_back("beta", format_number(c.retardation.beta));
    kv.emplace_back("ident", ident_name(c.identification));
    kv.emplace_back("window", format_number(ident_window(c.identification)));
    kv.emplace_back("eta", format_number(c.eta));
    kv.emplace_back("pairs", std::to_string(c.n_pairs));
    kv.emplace_back("seed", std::to_string(c.seed));
    kv.emplace_back("cfd", c.cfd ? "1" : "0");
    kv.emplace_back("grid_points", std::to_string(spec.grid_points));
    kv.emplace_back("theta_max", format_number(spec.theta_max));
    kv.emplace_back("b", format_number(spec.geometry.b.rad));
    kv.emplace_back("c_offset", format_number(spec.geometry.c_offset.rad));
    kv.emplace_back("d", format_number(spec.geometry.d.rad));
    return kv;
}

// ---------------------------------------------------------------------------
// Rows

/// One output line: simulated moments next to the reference model's values.
/// K-hat comes from the model without identification, E-hat from the model
/// with identification (both chosen by the source mode).
struct OutputRow {
    double theta = 0.0;
    Settings settings;
    std::array<std::optional<double>, 15> k{};
    std::array<std::optional<double>, 15> e{};
    std::array<std::optional<double>, 15> k_hat{};
    std::array<std::optional<double>, 15> e_hat{};
    std::int64_t n_pairs = 0;
    std::int64_t n_coincident = 0;
    double pair_ratio = 0.0;
    std::optional<double> chsh_k;
    std::optional<double> chsh_e;
};

inline std::vector<std::string> csv_columns() {
    std::vector<std::string> cols = {"theta", "a", "b", "c", "d"};
    for (const char *prefix : {"K", "E", "Khat", "Ehat"}) {
        for (const MomentMask m : kMomentOrder) {
            cols.push_back(prefix + moment_label(m));
        }
    }
    for (const char *tail : {"n_pairs", "n_coincident", "pair_ratio", "chsh_K", "chsh_E"}) {
        cols.emplace_back(tail);
    }
    return cols;
}

inline OutputRow oracle_row(double theta, const Settings &st, const RunConfig &config) {
    OutputRow row;
    row.theta = theta;
    row.settings = st;
    const auto cmp = oracle::comparison_for(config.source, st);
    const auto k_hat = oracle::moments_of(cmp.without_identification);
    const auto e_hat = oracle::moments_of(cmp.with_identification);
    const bool extended = config.topology == Topology::eeprb;
    for (std::size_t i = 0; i < kMomentOrder.size(); ++i) {
        const MomentMask m = kMomentOrder[i];
        if (extended || (m & 0b1100) == 0) {
            row.k_hat[i] = k_hat[m];
            row.e_hat[i] = e_hat[m];
        }
    }
    return row;
}

inline OutputRow make_row(const SweepPoint &point, const RunConfig &config) {
    OutputRow row = oracle_row(point.theta, point.settings, config);
    const MomentEstimates &m = point.moments;
    for (std::size_t i = 0; i < kMomentOrder.size(); ++i) {
        row.k[i] = m.K(kMomentOrder[i]);
        row.e[i] = m.E(kMomentOrder[i]);
    }
    row.n_pairs = m.n_pairs();
    row.n_coincident = m.n_coincident();
    row.pair_ratio = m.pair_ratio();
    if (m.topology() == Topology::eeprb) {
        const ChshValue chsh = chsh_single_run(m);
        row.chsh_k = chsh.k;
        row.chsh_e = chsh.e;
    }
    return row;
}

inline std::vector<std::string> row_cells(const OutputRow &row, bool with_simulation) {
    std::vector<std::string> cells = {format_number(row.theta), format_number(row.settings.a.rad),
                                      format_number(row.settings.b.rad), format_number(row.settings.c.rad),
                                      format_number(row.settings.d.rad)};
    const auto push_all = [&](const std::array<std::optional<double>, 15> &vals, bool present) {
        for (const auto &v : vals) {
            cells.push_back(present ? format_optional(v) : "NA");
        }
    };
    push_all(row.k, with_simulation);
    push_all(row.e, with_simulation);
    push_all(row.k_hat, true);
    push_all(row.e_hat, true);
    if (with_simulation) {
        cells.push_back(std::to_string(row.n_pairs));
        cells.push_back(std::to_string(row.n_coincident));
        cells.push_back(format_number(row.pair_ratio));
    } else {
        cells.insert(cells.end(), {"NA", "NA", "NA"});
    }
    cells.push_back(with_simulation ? format_optional(row.chsh_k) : "NA");
    cells.push_back(with_simulation ? format_optional(row.chsh_e) : "NA");
    return cells;
}

/// Comment lines carrying everything needed to regenerate the file.
inline std::vector<std::string> provenance_lines(std::string_view command, const SweepSpec &spec) {
    std::vector<std::string> lines;
    lines.push_back("eeprb " + std::string(kVersion));
    lines.push_back("command " + std::string(command));
    lines.push_back("prng " + std::string(RandomStream::kAlgorithm));
    std::string cfg = "config";
    for (const auto &[k, v] : describe(spec)) {
        cfg += " " + k + "=" + v;
    }
    lines.push_back(cfg);
    return lines;
}

inline void write_csv(std::ostream &out, std::string_view command, const SweepSpec &spec,
                      const std::vector<OutputRow> &rows, bool with_simulation = true) {
    for (const std::string &line : provenance_lines(command, spec)) {
        out << "# " << line << '\n';
    }
    const auto cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const OutputRow &row : rows) {
        const auto cells = row_cells(row, with_simulation);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out << (i ? "," : "") << cells[i];
        }
        out << '\n';
    }
}

inline void write_json(std::ostream &out, std::string_view command, const SweepSpec &spec,
                       const std::vector<OutputRow> &rows, bool with_simulation = true) {
    nlohmann::ordered_json doc;
    doc["tool"] = "eeprb";
    doc["version"] = kVersion;
    doc["command"] = command;
    doc["prng"] = RandomStream::kAlgorithm;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto &[k, v] : describe(spec)) {
        cfg[k] = v;
    }
    doc["config"] = cfg;
    const auto cols = csv_columns();
    doc["columns"] = cols;
    nlohmann::ordered_json out_rows = nlohmann::ordered_json::array();
    for (const OutputRow &row : rows) {
        const auto cells = row_cells(row, with_simulation);
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cells[i] == "NA") {
                obj[cols[i]] = nullptr;
            } else if (cols[i] == "n_pairs" || cols[i] == "n_coincident") {
                obj[cols[i]] = std::stoll(cells[i]);
            } else {
                double v = 0.0;
                std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
                obj[cols[i]] = v;
            }
        }
        out_rows.push_back(std::move(obj));
    }
    doc["rows"] = std::move(out_rows);
    out << doc.dump(2) << '\n';
}

/// Runs the sweep and formats the result.
inline std::vector<OutputRow> sweep_rows(const SweepSpec &spec, unsigned threads = 0) {
    const auto grid = theta_grid(spec.grid_points, spec.theta_max);
    const auto points = run_sweep(spec.base, grid, spec.geometry, threads);
    std::vector<OutputRow> rows;
    rows.reserve(points.size());
    for (const SweepPoint &p : points) {
        rows.push_back(make_row(p, spec.base));
    }
    return rows;
}

inline std::string sweep_csv(const SweepSpec &spec, unsigned threads = 0) {
    std::ostringstream os;
    write_csv(os, "sweep", spec, sweep_rows(spec, threads));
    return os.str();
}

}  // namespace eeprb
