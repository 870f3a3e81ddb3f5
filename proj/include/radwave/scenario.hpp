#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/version.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bubble_decomposition.hpp"
#include "elliptic_linearization.hpp"
#include "estimates_lab.hpp"
#include "io.hpp"
#include "linear_radiation.hpp"
#include "nonlinear_evolution.hpp"

namespace radwave::cli {

inline constexpr const char* library_version = "0.1.0";

enum class ExitStatus : int { ok = 0, validation = 1, computation = 2, check_failed = 3 };

enum class ValueKind { number, integer, boolean, list, string };

inline const char* to_string(ValueKind k)
{
    switch (k) {
    case ValueKind::number: return "number";
    case ValueKind::integer: return "integer";
    case ValueKind::boolean: return "bool";
    case ValueKind::list: return "list";
    case ValueKind::string: return "string";
    }
    return "?";
}

struct KeySpec {
    std::string name;
    ValueKind kind;
    /// Empty with required = true means the key must be supplied.
    std::string default_value;
    bool required = false;
    std::string doc;
};

struct ScenarioSpec {
    std::string name;
    std::string anchor;
    std::string summary;
    std::vector<KeySpec> keys;
};

/// Parsed config file: [run] holds scenario, seed and out; [params] holds scenario keys.
struct ScenarioConfig {
    std::string scenario;
    std::uint64_t seed = 1;
    std::string out;
    std::map<std::string, std::string> params;
};

namespace scenario_detail {

inline std::string trim(std::string_view s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline bool parse_number(const std::string& s, double& v)
{
    if (s.empty()) return false;
    std::size_t used = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size();
}

inline bool parse_bool(const std::string& s, bool& v)
{
    if (s == "true" || s == "yes" || s == "on" || s == "1") return v = true, true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return v = false, true;
    return false;
}

inline bool parse_list(const std::string& s, std::vector<double>& v)
{
    v.clear();
    if (trim(s).empty()) return true;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        double x;
        if (!parse_number(trim(cell), x)) return false;
        v.push_back(x);
    }
    return true;
}

inline bool well_typed(ValueKind k, const std::string& s)
{
    double d;
    bool b;
    std::vector<double> l;
    switch (k) {
    case ValueKind::number: return parse_number(s, d);
    case ValueKind::integer: return parse_number(s, d) && d == std::floor(d) && std::abs(d) < 9e15;
    case ValueKind::boolean: return parse_bool(s, b);
    case ValueKind::list: return parse_list(s, l);
    case ValueKind::string: return true;
    }
    return false;
}

} // namespace scenario_detail

/// Flat key = value text with [section] headers; '#' and ';' start comments.
inline ScenarioConfig parse_config(std::string_view text)
{
    using scenario_detail::trim;
    ScenarioConfig c;
    std::string section;
    std::vector<std::string> problems;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                problems.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = trim(s.substr(1, s.size() - 2));
            if (section != "run" && section != "params")
                problems.push_back("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string k = trim(s.substr(0, eq)), v = trim(s.substr(eq + 1));
        if (section == "run") {
            if (k == "scenario") {
                c.scenario = v;
            } else if (k == "seed") {
                double d;
                if (!scenario_detail::parse_number(v, d) || d < 0 || d != std::floor(d))
                    problems.push_back("run.seed: expected a nonnegative integer");
                else
                    c.seed = static_cast<std::uint64_t>(d);
            } else if (k == "out") {
                c.out = v;
            } else {
                problems.push_back("run." + k + ": unknown key");
            }
        } else if (section == "params") {
            if (c.params.count(k)) problems.push_back("params." + k + ": duplicate key");
            c.params[k] = v;
        } else {
            problems.push_back("line " + std::to_string(lineno) + ": key outside a section");
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid config";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError("cli_runner", msg);
    }
    return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ValidationError("cli_runner", "cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

inline const std::vector<ScenarioSpec>& scenario_registry()
{
    using V = ValueKind;
    static const std::vector<ScenarioSpec> reg = [] {
        std::vector<ScenarioSpec> r;
        r.push_back({"bootstrap", "worst-case envelope of the B/A recursion; M <= (2/5) M forces M = 0",
                     "iterate the envelope map and confirm geometric decay of M",
                     {{"c0s", V::number, "1", false, "absolute constant c0*"},
                      {"c1s", V::number, "1", false, "absolute constant c1*"},
                      {"c2s", V::number, "1", false, "absolute constant c2*"},
                      {"c3s", V::number, "1", false, "a-priori bound constant c3*"},
                      {"gamma", V::number, "25", false, "gamma > 20 c0*"},
                      {"c1", V::number, "1e-6", false, "small constant c1"},
                      {"c2", V::number, "100", false, "large constant c2"},
                      {"K", V::integer, "10", false, "number of dyadic shells"},
                      {"tau", V::number, "-1", false, "initial envelope size; negative selects half the admissible maximum"},
                      {"max_iter", V::integer, "200", false, "iteration cap"},
                      {"m_tolerance", V::number, "1e-12", false, "final M must fall below this"},
                      {"ratio_limit", V::number, "0.4", false, "per-iteration contraction limit (plus 1e-9)"}}});
        r.push_back({"decompose", "threshold crossings c2^{1/2} W(c2) of sqrt(r)|u0 - vL - sum| fix (zeta_j, lambda_j)",
                     "extract ground-state bubbles from a state file or a synthetic superposition",
                     {{"state_file", V::string, "", false, "CSV with r,u0,u1; empty builds the synthetic state"},
                      {"bubbles", V::list, "1, -1e-4", false, "synthetic signed scales zeta_j lambda_j"},
                      {"c2", V::number, "100", false, "threshold constant (>= 10)"},
                      {"n_max", V::integer, "5", false, "maximum number of bubbles"},
                      {"r_min", V::number, "1e-13", false, "synthetic grid inner radius"},
                      {"r_max", V::number, "1e7", false, "synthetic grid outer radius"},
                      {"per_decade", V::integer, "100", false, "synthetic grid density"},
                      {"refine", V::boolean, "true", false, "re-solve each crossing with the other bubbles removed"},
                      {"delta", V::number, "0", false, "positive value adds the lambda_{j+1}/lambda_j delta^-2 report"},
                      {"expected_J", V::integer, "-1", false, "negative skips the count check"},
                      {"scale_tolerance", V::number, "0.01", false, "relative scale error allowed for synthetic input"}}});
        r.push_back({"elliptic", "w* decaying solution of w'' + 5 W^4 w = -5 W^4 r, mu0 = w*(0), phi = (w* + beta v)/r",
                     "solve the linearized corrector with two integrators and report mu0, beta, r4",
                     {{"c", V::list, "100, 1000, 10000", false, "matching radii"},
                      {"r_infinity", V::number, "1e4", false, "asymptotic-series matching radius"},
                      {"tol", V::number, "1e-13", false, "integrator tolerance"},
                      {"per_decade", V::integer, "200", false, "output grid density"},
                      {"mu0_rel_tolerance", V::number, "5e-7", false, "agreement of mu0 across integrators"},
                      {"residual_tolerance", V::number, "1e-10", false, "ODE residual bound"},
                      {"beta_factor", V::number, "2", false, "max/min of |beta| c across the sweep"}}});
        r.push_back({"radiation", "8 pi ||G||^2_{|s|>R} + 4 pi R u0(R)^2 = ||(u0,u1)||^2_{H(R)}; r u_t -> G_+(r-t)",
                     "isometry and radiation-limit defects on random profiles",
                     {{"profiles", V::integer, "20", false, "number of random profiles"},
                      {"knots", V::integer, "15", false, "interior knots per profile"},
                      {"support", V::number, "4", false, "profiles live on [-S, S]"},
                      {"zero_mean", V::boolean, "false", false, "shift knots so that int G = 0"},
                      {"radii", V::list, "0, 0.5, 2", false, "exterior radii R"},
                      {"grid_r_min", V::number, "1e-4", false, "data grid inner radius"},
                      {"per_decade", V::integer, "16000", false, "data grid density"},
                      {"isometry_tolerance", V::number, "1e-6", false, "relative isometry error"},
                      {"defect_time_factor", V::number, "1000", false, "defects evaluated at t = factor S"},
                      {"defect_tolerance", V::number, "1e-4", false, "defects relative to ||G||^2"}}});
        r.push_back({"simulate", "u_tt - u_rr - (2/r) u_r = u^5 with psi = r u; G_+ = G_{0,+} + (1/2) int (s+t) F dt",
                     "evolve radial data and persist snapshots, energy and amplitude",
                     {{"data", V::string, "gaussian", false, "gaussian | ground_state | type_one"},
                      {"amplitude", V::number, "1e-3", false, "gaussian height"},
                      {"width", V::number, "1", false, "gaussian width"},
                      {"scale", V::number, "1", false, "ground-state scale (negative flips sign)"},
                      {"t_end", V::number, "10", false, "final time"},
                      {"dr", V::number, "0.01", false, "grid spacing"},
                      {"domain_radius", V::number, "30", false, "outer radius (> t_end)"},
                      {"cfl", V::number, "0.9", false, "dt / dr"},
                      {"snapshot_interval", V::number, "1", false, "0 stores only the endpoints"},
                      {"spatial_order", V::integer, "2", false, "2 or 4"},
                      {"time_order", V::integer, "2", false, "2 or 4"},
                      {"precision", V::string, "binary64", false, "binary64 | binary128"},
                      {"equilibrium_start", V::boolean, "false", false, "project onto the discrete static solution"},
                      {"nonlinear", V::boolean, "true", false, "false runs the free wave"},
                      {"amplitude_step", V::number, "0", false, "dt <= step / max|u|^2 when positive"},
                      {"blowup_ceiling", V::number, "1e6", false, "stop when max|u| exceeds this"},
                      {"accumulate", V::boolean, "false", false, "record the outgoing characteristic integrals"},
                      {"accumulator_tolerance", V::number, "1e-3", false, "relative tail allowance"},
                      {"energy_tolerance", V::number, "1e-4", false, "relative energy drift bound"},
                      {"tracking_tolerance", V::number, "0.01", false, "type_one: relative error against the ODE blow-up"}}});
        r.push_back({"tau-diagnostic", "tau = sup window term + ||chi_0 vL||_Y + sup r^{-1/2} int |G|; g_+- weak (1,1)",
                     "concentration components and the weak-type constant of the maximal functions",
                     {{"a", V::number, "0", false, "profile G_- = height on (a, b)"},
                      {"b", V::number, "1", false, "profile right end"},
                      {"height", V::number, "1", false, "profile height"},
                      {"lambda", V::number, "1", false, "window scale"},
                      {"y_norm_vL", V::number, "0", false, "precomputed ||chi_0 vL||_Y"},
                      {"kappa_min", V::number, "1e-3", false, "smallest level"},
                      {"kappa_decades", V::number, "3", false, "ladder span in decades"},
                      {"kappa_per_decade", V::integer, "4", false, "ladder density"},
                      {"samples", V::integer, "20000", false, "t samples per direction"},
                      {"expected_sup_window", V::number, "1", false, "negative skips"},
                      {"expected_l1_sup", V::number, "1", false, "negative skips"},
                      {"component_tolerance", V::number, "1e-6", false, "absolute tolerance on the components"},
                      {"weak_bound", V::number, "1", false, "fitted C must not exceed weak_bound ||G||^2"}}});
        r.push_back({"verify-estimate", "log-log slope of the registry norms against their claimed exponents",
                     "fit scaling exponents for one lemma id or all",
                     {{"lemma", V::string, "all", false, "registry id or 'all'"},
                      {"sweep", V::list, "", false, "custom sweep (single lemma only)"},
                      {"rule", V::string, "strict", false, "strict: 3 SE; tolerant: max(3 SE, registry tolerance)"}}});
        std::sort(r.begin(), r.end(), [](const ScenarioSpec& a, const ScenarioSpec& b) { return a.name < b.name; });
        return r;
    }();
    return reg;
}

inline const ScenarioSpec* find_scenario(const std::string& name)
{
    for (const auto& s : scenario_registry())
        if (s.name == name) return &s;
    return nullptr;
}

/// Stable text listing: one block per scenario, keys in declaration order.
inline std::string list_scenarios()
{
    std::ostringstream os;
    for (const auto& s : scenario_registry()) {
        os << s.name << "\n  anchor: " << s.anchor << "\n  " << s.summary << '\n';
        for (const auto& k : s.keys) {
            os << "    " << k.name << " (" << to_string(k.kind) << ")";
            if (k.required)
                os << " required";
            else
                os << " = " << (k.default_value.empty() ? "\"\"" : k.default_value);
            os << "  " << k.doc << '\n';
        }
    }
    return os.str();
}

/// Parameters resolved against a scenario spec; every key has a typed value.
class Params {
public:
    Params(const ScenarioSpec& spec, std::map<std::string, std::string> values) : spec_(&spec), v_(std::move(values)) {}

    double number(const std::string& k) const
    {
        double d = 0;
        scenario_detail::parse_number(raw(k), d);
        return d;
    }
    long long integer(const std::string& k) const { return static_cast<long long>(number(k)); }
    bool flag(const std::string& k) const
    {
        bool b = false;
        scenario_detail::parse_bool(raw(k), b);
        return b;
    }
    std::vector<double> list(const std::string& k) const
    {
        std::vector<double> l;
        scenario_detail::parse_list(raw(k), l);
        return l;
    }
    const std::string& str(const std::string& k) const { return raw(k); }

    nlohmann::json to_json() const
    {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& k : spec_->keys) {
            switch (k.kind) {
            case ValueKind::number: j[k.name] = number(k.name); break;
            case ValueKind::integer: j[k.name] = integer(k.name); break;
            case ValueKind::boolean: j[k.name] = flag(k.name); break;
            case ValueKind::list: j[k.name] = list(k.name); break;
            case ValueKind::string: j[k.name] = str(k.name); break;
            }
        }
        return j;
    }

private:
    const std::string& raw(const std::string& k) const
    {
        auto it = v_.find(k);
        if (it == v_.end()) throw ValidationError("cli_runner", "parameter '" + k + "' not declared by " + spec_->name);
        return it->second;
    }

    const ScenarioSpec* spec_;
    std::map<std::string, std::string> v_;
};

/// Checks scenario name, unknown keys, missing required keys and value types before any computation.
inline Params validate(const ScenarioConfig& c)
{
    const ScenarioSpec* spec = find_scenario(c.scenario);
    if (!spec) throw ValidationError("cli_runner", "unknown scenario '" + c.scenario + "'");
    std::vector<std::string> problems;
    std::map<std::string, std::string> resolved;
    for (const auto& k : spec->keys) {
        auto it = c.params.find(k.name);
        if (it == c.params.end()) {
            if (k.required)
                problems.push_back("missing key '" + k.name + "'");
            else
                resolved[k.name] = k.default_value;
            continue;
        }
        if (!scenario_detail::well_typed(k.kind, it->second))
            problems.push_back("key '" + k.name + "': expected " + to_string(k.kind) + ", got '" + it->second + "'");
        resolved[k.name] = it->second;
    }
    for (const auto& [k, v] : c.params) {
        const bool known = std::any_of(spec->keys.begin(), spec->keys.end(), [&](const KeySpec& s) { return s.name == k; });
        if (!known) problems.push_back("unknown key '" + k + "'");
    }
    if (!problems.empty()) {
        std::string msg = "scenario " + c.scenario + ":";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError("cli_runner", msg);
    }
    return Params(*spec, std::move(resolved));
}

struct Check {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool passed = false;
};

struct ExitReport {
    ExitStatus status = ExitStatus::ok;
    std::string scenario;
    std::string message;
    std::vector<Check> checks;
    std::vector<std::string> artifacts;
    nlohmann::json summary = nlohmann::json::object();

    int code() const { return static_cast<int>(status); }
};

namespace scenario_detail {

struct Context {
    const Params& p;
    std::uint64_t seed;
    std::filesystem::path out;
    ExitReport& rep;

    void check(const std::string& name, double value, double limit, bool passed) { rep.checks.push_back({name, value, limit, passed}); }
    void artifact(const std::filesystem::path& f) { rep.artifacts.push_back(std::filesystem::relative(f, out).generic_string()); }
};

inline double max_rel(const std::vector<std::pair<double, double>>& e)
{
    double m = 0;
    for (const auto& [t, E] : e) m = std::max(m, std::abs(E / e.front().second - 1));
    return m;
}

inline void run_simulate(Context& cx)
{
    const Params& p = cx.p;
    EvolutionParams ep;
    ep.dr = p.number("dr");
    ep.cfl = p.number("cfl");
    ep.domain_radius = p.number("domain_radius");
    ep.snapshot_interval = p.number("snapshot_interval");
    ep.spatial_order = static_cast<int>(p.integer("spatial_order"));
    ep.time_order = static_cast<int>(p.integer("time_order"));
    ep.discrete_equilibrium_start = p.flag("equilibrium_start");
    ep.nonlinear = p.flag("nonlinear");
    ep.amplitude_step = p.number("amplitude_step");
    ep.blowup_ceiling = p.number("blowup_ceiling");
    ep.accumulate_characteristics = p.flag("accumulate");
    ep.accumulator_tolerance = p.number("accumulator_tolerance");
    const std::string prec = p.str("precision");
    if (prec == "binary128")
        ep.precision = Precision::binary128;
    else if (prec != "binary64")
        throw ValidationError("cli_runner", "precision must be binary64 or binary128");
    const double t_end = p.number("t_end");
    const std::string data = p.str("data");

    const double reach = ep.domain_radius + ep.dr;
    const auto grid = make_grid(ep.dr / 10, reach, static_cast<std::size_t>(std::ceil(reach / ep.dr * 2)) + 1, GridScheme::uniform);
    StatePair init;
    const double c0 = std::pow(0.75, 0.25);
    auto chi = [](double r) {
        if (r <= 2) return 1.0;
        if (r >= 3) return 0.0;
        const double x = r - 2;
        return 1 - x * x * (3 - 2 * x);
    };
    auto dchi = [](double r) {
        if (r <= 2 || r >= 3) return 0.0;
        const double x = r - 2;
        return -6 * x * (1 - x);
    };
    if (data == "gaussian") {
        const double a = p.number("amplitude"), w = p.number("width");
        if (!(w > 0)) throw ValidationError("cli_runner", "width must be positive");
        init = make_state(grid, [&](double r) { return a * std::exp(-r * r / (w * w)); },
                          [&](double r) { return -2 * r / (w * w) * a * std::exp(-r * r / (w * w)); }, [](double) { return 0.0; });
    } else if (data == "ground_state") {
        const double s = p.number("scale");
        if (s == 0) throw ValidationError("cli_runner", "scale must be nonzero");
        init = ground_state_pair(grid, Bubble{s > 0 ? 1 : -1, std::abs(s)});
    } else if (data == "type_one") {
        // Spatially constant ODE blow-up c0 (1 - t)^{-1/2} on r < 2, cut off smoothly by r = 3.
        init = make_state(grid, [&](double r) { return c0 * chi(r); }, [&](double r) { return c0 * dchi(r); },
                          [&](double r) { return 0.5 * c0 * chi(r); });
    } else {
        throw ValidationError("cli_runner", "data must be gaussian, ground_state or type_one");
    }

    const Trajectory tr = evolve(init, t_end, ep);
    nlohmann::json tj = io::write_trajectory(cx.out / "snapshots", tr);
    io::write_json(cx.out / "trajectory.json", tj);
    cx.artifact(cx.out / "trajectory.json");
    std::vector<double> at, av;
    for (const auto& [t, a] : tr.amplitude) {
        at.push_back(t);
        av.push_back(a);
    }
    io::write_csv(cx.out / "amplitude.csv", {{"t", "max_abs_u"}, {at, av}, {}});
    cx.artifact(cx.out / "amplitude.csv");
    const auto e = energy_drift(tr);
    std::vector<double> et, ev;
    for (const auto& [t, E] : e) {
        et.push_back(t);
        ev.push_back(E);
    }
    io::write_csv(cx.out / "energy.csv", {{"t", "energy"}, {et, ev}, {}});
    cx.artifact(cx.out / "energy.csv");
    cx.rep.summary["steps"] = tr.steps;
    cx.rep.summary["blew_up"] = tr.blew_up;
    if (tr.blowup_time) cx.rep.summary["blowup_time"] = *tr.blowup_time;

    if (!tr.blew_up) {
        const double d = max_rel(e);
        cx.rep.summary["energy_drift"] = d;
        cx.check("energy_drift", d, p.number("energy_tolerance"), d <= p.number("energy_tolerance"));
    }
    if (data == "type_one") {
        double worst = 0;
        for (const auto& [t, a] : tr.amplitude)
            if (t < 1 && a < 1e3) worst = std::max(worst, std::abs(a / type_one_reference(t, 1.0) - 1));
        cx.check("type_one_tracking", worst, p.number("tracking_tolerance"), worst <= p.number("tracking_tolerance"));
    }
    if (ep.accumulate_characteristics) {
        const RadiationProfile g0 = positive_profile(profile_from_data(init, 0.0));
        const RadiationProfile gp = nonlinear_radiation_profile(tr, g0);
        io::write_profile_csv(cx.out / "radiation_profile.csv", gp);
        cx.artifact(cx.out / "radiation_profile.csv");
        double l2 = 0;
        const auto& a = tr.acc.integral;
        const auto& s = tr.acc.labels;
        for (std::size_t j = 0; j + 1 < a.size(); ++j) l2 += 0.5 * (s[j + 1] - s[j]) * (a[j] * a[j] + a[j + 1] * a[j + 1]);
        const double bound = tr.acc.source_l1l2 / (4 * std::sqrt(std::numbers::pi));
        cx.rep.summary["profile_change"] = std::sqrt(l2);
        cx.rep.summary["profile_bound"] = bound;
        cx.check("profile_change_bound", std::sqrt(l2), bound, std::sqrt(l2) <= bound);
    }
}

inline void run_decompose(Context& cx)
{
    const Params& p = cx.p;
    StatePair st;
    std::vector<Bubble> truth;
    if (!p.str("state_file").empty()) {
        st = io::read_state_csv(p.str("state_file"), 1.0, 2.0);
    } else {
        for (double z : p.list("bubbles")) {
            if (z == 0) throw ValidationError("cli_runner", "bubble scales must be nonzero");
            truth.push_back(Bubble{z > 0 ? 1 : -1, std::abs(z)});
        }
        std::sort(truth.begin(), truth.end(), [](const Bubble& a, const Bubble& b) { return a.scale > b.scale; });
        const auto g = make_log_grid(p.number("r_min"), p.number("r_max"), static_cast<int>(p.integer("per_decade")));
        st = bubbles_state(g, BubbleList(truth));
        io::write_state_csv(cx.out / "state.csv", st);
        cx.artifact(cx.out / "state.csv");
    }
    DecompositionOptions opt;
    opt.refine = p.flag("refine");
    DecompositionResult res =
        extract_bubbles(st, zero_state(st.grid_ptr()), p.number("c2"), static_cast<std::size_t>(p.integer("n_max")), opt);
    resolution_residual(st, res, zero_state(st.grid_ptr()));
    nlohmann::json j = io::to_json(res);
    if (p.number("delta") > 0 && res.bubbles.size() >= 2) {
        nlohmann::json rr = nlohmann::json::array();
        for (const auto& e : ratio_report(res, p.number("delta")))
            rr.push_back({{"j", e.j}, {"ratio", e.ratio}, {"normalized", e.normalized}});
        j["ratio_report"] = rr;
    }
    io::write_json(cx.out / "decomposition.json", j);
    cx.artifact(cx.out / "decomposition.json");
    cx.rep.summary["J"] = res.bubbles.size();
    if (p.integer("expected_J") >= 0)
        cx.check("bubble_count", static_cast<double>(res.bubbles.size()), static_cast<double>(p.integer("expected_J")),
                 static_cast<long long>(res.bubbles.size()) == p.integer("expected_J"));
    if (!truth.empty()) {
        bool count_ok = res.bubbles.size() == truth.size();
        double worst = count_ok ? 0.0 : inf;
        bool signs = count_ok;
        for (std::size_t k = 0; count_ok && k < truth.size(); ++k) {
            worst = std::max(worst, std::abs(res.bubbles[k].scale / truth[k].scale - 1));
            signs = signs && res.bubbles[k].sign == truth[k].sign;
        }
        cx.check("synthetic_signs", signs ? 1.0 : 0.0, 1.0, signs);
        cx.check("synthetic_scales", worst, p.number("scale_tolerance"), worst <= p.number("scale_tolerance"));
    }
}

inline void run_elliptic(Context& cx)
{
    const Params& p = cx.p;
    WStarOptions o;
    o.r_infinity = p.number("r_infinity");
    o.tol = p.number("tol");
    o.per_decade = static_cast<int>(p.integer("per_decade"));
    const WStar a = solve_w_star(o);
    o.integrator = EllipticIntegrator::gauss_collocation;
    const WStar b = solve_w_star(o);
    const double agree = std::abs(a.mu0 / b.mu0 - 1);
    const double res = ode_residual(a);
    nlohmann::json j{{"mu0_rkf78", a.mu0}, {"mu0_collocation", b.mu0}, {"mu0_relative_difference", agree}, {"ode_residual", res}};
    nlohmann::json per = nlohmann::json::array();
    double lo = inf, hi = 0;
    for (double c : p.list("c")) {
        const EllipticSolution s = build_phi(c, a);
        const double bc = std::abs(s.beta) * c, r4 = report_r4(s);
        lo = std::min(lo, bc);
        hi = std::max(hi, bc);
        per.push_back({{"c", c}, {"beta", s.beta}, {"abs_beta_c", bc}, {"r4", r4}});
        std::vector<double> r, w, ph;
        for (double x : a.grid->nodes()) {
            r.push_back(x);
            w.push_back(s.w(x));
            ph.push_back(s.phi(x));
        }
        std::ostringstream name;
        name << "phi_c" << c << ".csv";
        io::write_csv(cx.out / name.str(), {{"r", "w", "phi"}, {r, w, ph}, {}});
        cx.artifact(cx.out / name.str());
    }
    j["matching"] = per;
    io::write_json(cx.out / "elliptic.json", j);
    cx.artifact(cx.out / "elliptic.json");
    cx.rep.summary["mu0"] = a.mu0;
    cx.check("mu0_agreement", agree, p.number("mu0_rel_tolerance"), agree <= p.number("mu0_rel_tolerance"));
    cx.check("ode_residual", res, p.number("residual_tolerance"), res <= p.number("residual_tolerance"));
    if (hi > 0) cx.check("beta_c_spread", hi / lo, p.number("beta_factor"), hi / lo <= p.number("beta_factor"));
}

inline void run_verify(Context& cx)
{
    const Params& p = cx.p;
    const std::string id = p.str("lemma"), rule = p.str("rule");
    if (rule != "strict" && rule != "tolerant") throw ValidationError("cli_runner", "rule must be strict or tolerant");
    std::vector<std::string> ids;
    if (id == "all") {
        for (const auto& e : lemma_registry()) ids.push_back(e.id);
    } else {
        find_lemma(id);
        ids.push_back(id);
    }
    const auto sweep = p.list("sweep");
    if (!sweep.empty() && ids.size() != 1) throw ValidationError("cli_runner", "a custom sweep needs a single lemma");
    nlohmann::json all = nlohmann::json::array();
    for (const auto& k : ids) {
        const ScalingReport r = sweep.empty() ? verify_scaling(k) : verify_scaling(k, sweep);
        all.push_back(io::to_json(r));
        std::vector<double> x, v, e;
        for (const auto& s : r.samples) {
            x.push_back(s.parameter);
            v.push_back(s.value);
            e.push_back(s.abs_error);
        }
        io::write_csv(cx.out / ("samples_" + k + ".csv"), {{"parameter", "value", "abs_error"}, {x, v, e}, {}});
        cx.artifact(cx.out / ("samples_" + k + ".csv"));
        const bool ok = rule == "strict" ? r.within_3se : r.passed;
        cx.check(k, r.fitted, r.claimed, ok);
    }
    io::write_json(cx.out / "scaling.json", all);
    cx.artifact(cx.out / "scaling.json");
}

inline void run_bootstrap(Context& cx)
{
    const Params& p = cx.p;
    BootstrapConstants c{p.number("c0s"), p.number("c1s"), p.number("c2s"), p.number("c3s"),
                         p.number("gamma"), p.number("c1"), p.number("c2")};
    double tau = p.number("tau");
    if (tau < 0) tau = admissible_tau(c) / 2;
    const auto r = bootstrap_recursion_check(c, static_cast<int>(p.integer("K")), tau, static_cast<int>(p.integer("max_iter")));
    io::write_json(cx.out / "bootstrap.json", io::to_json(r));
    cx.artifact(cx.out / "bootstrap.json");
    std::vector<double> it, m, q;
    for (std::size_t k = 0; k < r.history.size(); ++k) {
        it.push_back(static_cast<double>(k));
        m.push_back(r.history[k]);
        q.push_back(k == 0 ? 0.0 : r.ratios[k - 1]);
    }
    io::write_csv(cx.out / "history.csv", {{"iteration", "M", "ratio"}, {it, m, q}, {}});
    cx.artifact(cx.out / "history.csv");
    const double mr = r.ratios.empty() ? 0.0 : *std::max_element(r.ratios.begin(), r.ratios.end());
    cx.rep.summary["M"] = r.M;
    cx.check("final_M", r.M, p.number("m_tolerance"), r.M <= p.number("m_tolerance"));
    cx.check("max_ratio", mr, p.number("ratio_limit") + 1e-9, mr <= p.number("ratio_limit") + 1e-9);
}

inline void run_radiation(Context& cx)
{
    const Params& p = cx.p;
    const double S = p.number("support");
    const auto n = static_cast<std::size_t>(p.integer("profiles"));
    const auto radii = p.list("radii");
    const auto grid = make_log_grid(p.number("grid_r_min"), S, static_cast<int>(p.integer("per_decade")));
    const double t = p.number("defect_time_factor") * S;
    std::vector<double> idx, rr, lhs, rhs, rel;
    std::vector<double> didx, dt, dr, nrm;
    double worst_iso = 0, worst_def = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const RadiationProfile g =
            random_profile(cx.seed * 1000003ULL + k, S, static_cast<std::size_t>(p.integer("knots")), p.flag("zero_mean"));
        for (double R : radii) {
            const auto s = isometry_sides(g, R, grid);
            const double e = std::abs(s.energy_sq / s.profile_side - 1);
            worst_iso = std::max(worst_iso, e);
            idx.push_back(static_cast<double>(k));
            rr.push_back(R);
            lhs.push_back(s.energy_sq);
            rhs.push_back(s.profile_side);
            rel.push_back(e);
        }
        const auto d = radiation_defects(g, t);
        const double g2 = g.l2_sq();
        worst_def = std::max(worst_def, std::max(d.time_defect, d.radial_defect) / g2);
        didx.push_back(static_cast<double>(k));
        dt.push_back(d.time_defect);
        dr.push_back(d.radial_defect);
        nrm.push_back(g2);
    }
    io::write_csv(cx.out / "isometry.csv", {{"profile", "R", "energy_sq", "profile_side", "relative_error"}, {idx, rr, lhs, rhs, rel}, {}});
    cx.artifact(cx.out / "isometry.csv");
    io::write_csv(cx.out / "defects.csv", {{"profile", "time_defect", "radial_defect", "l2_sq"}, {didx, dt, dr, nrm}, {}});
    cx.artifact(cx.out / "defects.csv");
    cx.check("isometry", worst_iso, p.number("isometry_tolerance"), worst_iso <= p.number("isometry_tolerance"));
    cx.check("radiation_defects", worst_def, p.number("defect_tolerance"), worst_def <= p.number("defect_tolerance"));
}

inline void run_tau(Context& cx)
{
    const Params& p = cx.p;
    const double a = p.number("a"), b = p.number("b"), h = p.number("height");
    if (!(b > a)) throw ValidationError("cli_runner", "need a < b");
    const RadiationProfile g = RadiationProfile::indicator(a, b, h);
    const auto rep = concentration_tau(g, p.number("y_norm_vL"), p.number("lambda"));
    std::vector<double> kap;
    const int per = static_cast<int>(p.integer("kappa_per_decade"));
    const int steps = static_cast<int>(std::lround(p.number("kappa_decades") * per));
    for (int i = 0; i <= steps; ++i) kap.push_back(p.number("kappa_min") * std::pow(10.0, static_cast<double>(i) / per));
    const double g2 = g.l2_sq();
    // g_-(t) vanishes for t >= b and both maximal functions fall below ||G||^2 / |t| far out.
    const double reach = std::max(std::abs(a), std::abs(b)) + 1.5 * g2 / kap.front();
    const auto n = static_cast<std::size_t>(p.integer("samples"));
    const double cm = weak_type_constant(maximal_function(g, Direction::minus), kap, 0.0, reach, n);
    const double cp = weak_type_constant(maximal_function(g, Direction::plus), kap, 0.0, reach, n);
    nlohmann::json j{{"term_sup_window", rep.term_sup_window}, {"term_y_norm", rep.term_y_norm},
                     {"term_l1_sup", rep.term_l1_sup},         {"total", rep.total},
                     {"l2_sq", g2},                            {"weak_constant_minus", cm},
                     {"weak_constant_plus", cp},               {"kappas", kap}};
    io::write_json(cx.out / "tau.json", j);
    cx.artifact(cx.out / "tau.json");
    const double tol = p.number("component_tolerance");
    if (p.number("expected_sup_window") >= 0) {
        const double e = std::abs(rep.term_sup_window - p.number("expected_sup_window"));
        cx.check("term_sup_window", e, tol, e <= tol);
    }
    if (p.number("expected_l1_sup") >= 0) {
        const double e = std::abs(rep.term_l1_sup - p.number("expected_l1_sup"));
        cx.check("term_l1_sup", e, tol, e <= tol);
    }
    const double lim = p.number("weak_bound") * g2;
    cx.check("weak_11_minus", cm, lim, cm <= lim * (1 + 1e-9));
    cx.check("weak_11_plus", cp, lim, cp <= lim * (1 + 1e-9));
}

inline nlohmann::json versions()
{
    return {{"radwave", library_version},
            {"cxx_standard", static_cast<long>(__cplusplus)},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                          std::to_string(BOOST_VERSION % 100)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                  "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

} // namespace scenario_detail

/// Validates, runs, writes artifacts plus manifest.json into out_dir (config value when empty).
inline ExitReport run_scenario(const ScenarioConfig& cfg, std::filesystem::path out_dir = {})
{
    ExitReport rep;
    rep.scenario = cfg.scenario;
    try {
        const Params params = validate(cfg);
        if (out_dir.empty()) out_dir = cfg.out;
        if (out_dir.empty()) throw ValidationError("cli_runner", "no output directory (use --out or run.out)");
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec || !std::filesystem::is_directory(out_dir))
            throw ValidationError("cli_runner", "output directory not writable: " + out_dir.string());
        scenario_detail::Context cx{params, cfg.seed, out_dir, rep};
        const std::string& s = cfg.scenario;
        try {
            if (s == "simulate") scenario_detail::run_simulate(cx);
            else if (s == "decompose") scenario_detail::run_decompose(cx);
            else if (s == "elliptic") scenario_detail::run_elliptic(cx);
            else if (s == "verify-estimate") scenario_detail::run_verify(cx);
            else if (s == "bootstrap") scenario_detail::run_bootstrap(cx);
            else if (s == "radiation") scenario_detail::run_radiation(cx);
            else if (s == "tau-diagnostic") scenario_detail::run_tau(cx);
        } catch (const ValidationError&) {
            throw;
        } catch (const ComputationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ComputationError("cli_runner", e.what());
        }
        const bool ok = std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return c.passed; });
        rep.status = ok ? ExitStatus::ok : ExitStatus::check_failed;
        rep.message = ok ? "all checks passed" : "check failure";

        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"passed", c.passed}});
        nlohmann::json m{{"scenario", s},
                         {"seed", cfg.seed},
                         {"parameters", params.to_json()},
                         {"checks", checks},
                         {"summary", rep.summary},
                         {"artifacts", rep.artifacts},
                         {"status", rep.code()},
                         {"versions", scenario_detail::versions()}};
        io::write_json(out_dir / "manifest.json", m);
    } catch (const ValidationError& e) {
        rep.status = ExitStatus::validation;
        rep.message = e.what();
    } catch (const ComputationError& e) {
        rep.status = ExitStatus::computation;
        rep.message = e.what();
    }
    return rep;
}

/// One line per check: PASS/FAIL name value (limit).
inline void print_report(std::ostream& os, const ExitReport& r)
{
    os << r.scenario << ": " << r.message << '\n';
    for (const auto& c : r.checks)
        os << "  " << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(28) << c.name << ' ' << io::format_double(c.value)
           << " (limit " << io::format_double(c.limit) << ")\n";
}

} // namespace radwave::cli
