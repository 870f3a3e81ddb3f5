#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bubble_decomposition.hpp"
#include "core_fields.hpp"
#include "estimates_lab.hpp"
#include "linear_radiation.hpp"
#include "nonlinear_evolution.hpp"

namespace radwave::io {

using json = nlohmann::json;

/// Round-trip text form of a double (17 significant digits).
inline std::string format_double(double x)
{
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    /// Lines starting with '#' ahead of the header.
    std::vector<std::string> comments;
};

inline void write_csv(const std::filesystem::path& path, const Table& t)
{
    const std::size_t m = t.header.size();
    if (t.columns.size() != m) throw ValidationError("io", "header and column counts differ");
    const std::size_t n = m ? t.columns[0].size() : 0;
    for (const auto& c : t.columns)
        if (c.size() != n) throw ValidationError("io", "ragged columns");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw ValidationError("io", "cannot write " + path.string());
    for (const auto& c : t.comments) f << "# " << c << '\n';
    for (std::size_t j = 0; j < m; ++j) f << (j ? "," : "") << t.header[j];
    f << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) f << (j ? "," : "") << format_double(t.columns[j][i]);
        f << '\n';
    }
}

inline Table read_csv(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ValidationError("io", "cannot read " + path.string());
    Table t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line.size() > 2 ? line.substr(2) : "");
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            t.header = cells;
            t.columns.assign(cells.size(), {});
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ValidationError("io", path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
        for (std::size_t j = 0; j < cells.size(); ++j) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(cells[j], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0) throw ValidationError("io", path.string() + ":" + std::to_string(lineno) + ": not a number");
            t.columns[j].push_back(v);
        }
    }
    if (!have_header) throw ValidationError("io", path.string() + ": missing header row");
    return t;
}

inline std::size_t column_index(const Table& t, const std::string& name)
{
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (t.header[j] == name) return j;
    throw ValidationError("io", "missing column '" + name + "'");
}

/// Columns r, u0, u1, plus du0 when the state carries an exact derivative.
inline void write_state_csv(const std::filesystem::path& path, const StatePair& s)
{
    if (s.du0)
        write_csv(path, {{"r", "u0", "u1", "du0"}, {s.grid().nodes(), s.u0.values(), s.u1.values(), s.du0->values()}, {}});
    else
        write_csv(path, {{"r", "u0", "u1"}, {s.grid().nodes(), s.u0.values(), s.u1.values()}, {}});
}

/// Reads r, u0, u1 (optionally du0). Tails are declared by the caller since a file cannot certify decay.
inline StatePair read_state_csv(const std::filesystem::path& path, std::optional<double> tail0 = std::nullopt,
                                std::optional<double> tail1 = std::nullopt)
{
    const Table t = read_csv(path);
    const auto& r = t.columns[column_index(t, "r")];
    bool geometric = r.size() > 2;
    for (std::size_t i = 2; geometric && i < r.size(); ++i)
        geometric = std::abs((r[i] / r[i - 1]) / (r[1] / r[0]) - 1) < 1e-9;
    auto g = std::make_shared<const RadialGrid>(r, geometric ? GridScheme::logarithmic : GridScheme::uniform);
    std::optional<RadialProfile> du;
    for (const auto& h : t.header)
        if (h == "du0") du = RadialProfile(g, t.columns[column_index(t, "du0")]);
    return StatePair(RadialProfile(g, t.columns[column_index(t, "u0")], tail0),
                     RadialProfile(g, t.columns[column_index(t, "u1")], tail1), du);
}

/// Columns s, G; exterior radius and residue go in a leading comment.
inline void write_profile_csv(const std::filesystem::path& path, const RadiationProfile& g)
{
    write_csv(path, {{"s", "G"},
                     {g.s(), g.g()},
                     {"exterior_radius=" + format_double(g.exterior_radius()) + ",residue=" + format_double(g.residue())}});
}

inline RadiationProfile read_profile_csv(const std::filesystem::path& path)
{
    const Table t = read_csv(path);
    double R = 0, res = 0;
    for (const auto& c : t.comments) {
        std::stringstream ss(c);
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) continue;
            const std::string k = kv.substr(0, eq);
            if (k == "exterior_radius") R = std::stod(kv.substr(eq + 1));
            if (k == "residue") res = std::stod(kv.substr(eq + 1));
        }
    }
    return RadiationProfile(t.columns[column_index(t, "s")], t.columns[column_index(t, "G")], R, res);
}

inline void write_json(const std::filesystem::path& path, const json& j)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw ValidationError("io", "cannot write " + path.string());
    f << j.dump(2) << '\n';
}

inline json to_json(const BubbleList& b)
{
    json a = json::array();
    for (const auto& x : b.items()) a.push_back({{"sign", x.sign}, {"scale", x.scale}});
    return a;
}

inline json to_json(const DecompositionResult& d)
{
    json j{{"J", d.bubbles.size()},
           {"bubbles", to_json(d.bubbles)},
           {"one_pass", to_json(d.one_pass)},
           {"case", to_string(d.case_tag)},
           {"ratios", d.ratios},
           {"c2", d.c2},
           {"posthoc_zero", d.posthoc_zero},
           {"refinement_sweeps", d.refinement_sweeps}};
    j["residual_full"] = d.residual_full ? json(*d.residual_full) : json(nullptr);
    j["residual_exterior"] = d.residual_exterior ? json(*d.residual_exterior) : json(nullptr);
    return j;
}

inline json to_json(const ScalingReport& r)
{
    json s = json::array();
    for (const auto& x : r.samples) s.push_back({{"parameter", x.parameter}, {"value", x.value}, {"abs_error", x.abs_error}});
    return {{"lemma_id", r.lemma_id},   {"parameter", r.parameter_name}, {"estimate", r.estimate},
            {"claimed", r.claimed},     {"fitted", r.fitted},            {"slope_se", r.slope_se},
            {"intercept", r.intercept}, {"tolerance", r.tolerance},      {"log_correction", r.log_correction},
            {"passed", r.passed},       {"within_3se", r.within_3se},    {"samples", s}};
}

inline json to_json(const BootstrapResult& b)
{
    const auto& c = b.state.constants;
    return {{"M", b.M},
            {"K", b.state.K},
            {"tau", b.state.tau},
            {"iterations", b.ratios.size()},
            {"max_ratio", b.ratios.empty() ? 0.0 : *std::max_element(b.ratios.begin(), b.ratios.end())},
            {"history", b.history},
            {"constants",
             {{"c0s", c.c0s}, {"c1s", c.c1s}, {"c2s", c.c2s}, {"c3s", c.c3s}, {"gamma", c.gamma}, {"c1", c.c1}, {"c2", c.c2}}}};
}

/// Snapshots as snap_NNNN.csv (r, u, u_t) plus an index.
inline json write_trajectory(const std::filesystem::path& dir, const Trajectory& tr)
{
    std::filesystem::create_directories(dir);
    json idx = json::array();
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        const auto& s = tr.snapshots[k];
        char name[32];
        std::snprintf(name, sizeof name, "snap_%04zu.csv", k);
        write_csv(dir / name, {{"r", "u", "u_t"}, {s.state.grid().nodes(), s.state.u0.values(), s.state.u1.values()}, {}});
        idx.push_back({{"file", name}, {"time", s.time}, {"origin_value", s.origin_value}});
    }
    return {{"snapshots", idx},
            {"dr", tr.dr},
            {"dt_initial", tr.dt_initial},
            {"domain_radius", tr.domain_radius},
            {"cfl_ratio_max", tr.cfl_ratio_max},
            {"steps", tr.steps},
            {"blew_up", tr.blew_up},
            {"blowup_time", tr.blowup_time ? json(*tr.blowup_time) : json(nullptr)}};
}

} // namespace radwave::io
