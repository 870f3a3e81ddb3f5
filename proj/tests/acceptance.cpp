#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>

#include <radwave/radwave.hpp>

using namespace radwave;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [miss]");
        pass = pass && ok;
    }
};

std::string num(double x)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", x);
    return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Runs one criterion, converting any thrown error into a failure line.
bool report(int id, const std::function<Outcome()>& f)
{
    Outcome o;
    try {
        o = f();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    std::printf("AC%d %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    return o.pass;
}

double max_rel(double a, double b) { return std::abs(a / b - 1); }

StatePair gaussian(double eps)
{
    auto g = make_grid(0.001, 60, 30000, GridScheme::uniform);
    return make_state(
        g, [=](double r) { return eps * std::exp(-r * r); }, [=](double r) { return -2 * r * eps * std::exp(-r * r); },
        [](double) { return 0.0; });
}

EvolutionParams base(double dr, double R, double snap)
{
    EvolutionParams p;
    p.dr = dr;
    p.domain_radius = R;
    p.snapshot_interval = snap;
    return p;
}

EvolutionParams ground_params(double dr, double R, double snap)
{
    EvolutionParams p = base(dr, R, snap);
    p.precision = Precision::binary128;
    p.discrete_equilibrium_start = true;
    return p;
}

Outcome isometry()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto grid = make_log_grid(1e-4, 4.0, 16000);
    double worst = 0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const RadiationProfile g = random_profile(100 + k, 4.0, 15);
        for (double R : {0.0, 0.5, 2.0}) {
            const auto s = isometry_sides(g, R, grid);
            worst = std::max(worst, max_rel(s.energy_sq, s.profile_side));
        }
    }
    const double dt = seconds_since(t0);
    Outcome o;
    o.require(worst <= 1e-6, "max rel " + num(worst) + " <= 1e-6");
    o.require(dt < 10, "runtime " + num(dt) + "s < 10s");
    return o;
}

Outcome radiation_limits()
{
    const auto t0 = std::chrono::steady_clock::now();
    const double S = 4.0;
    double radial = 0, time = 0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const RadiationProfile g = random_profile(100 + k, S, 15);
        const auto d = radiation_defects(g, 1e3 * S);
        radial = std::max(radial, d.radial_defect / g.l2_sq());
        time = std::max(time, d.time_defect / g.l2_sq());
    }
    const double dt = seconds_since(t0);
    Outcome o;
    o.require(radial < 1e-4, "radial defect/||G||^2 " + num(radial) + " < 1e-4");
    o.require(time < 1e-4, "time defect/||G||^2 " + num(time) + " < 1e-4");
    o.require(dt < 30, "runtime " + num(dt) + "s < 30s");
    return o;
}

Outcome ground_state_checks()
{
    Outcome o;
    auto g1 = make_grid(0.1, 10, 1000, GridScheme::uniform);
    auto g2 = make_grid(0.1, 10, 2000, GridScheme::uniform);
    const double order = std::log2(stationarity_residual(Bubble{1, 1}, *g1) / stationarity_residual(Bubble{1, 1}, *g2));
    o.require(order >= 1.8 && order <= 2.2, "stationarity order " + num(order) + " in [1.8, 2.2]");
    auto g = make_log_grid(1e-8, 1e8, 200);
    const double e1 = energy(ground_state_pair(g, Bubble{1, 1}));
    double spread = 0;
    for (double lam : {1e-3, 0.1, 10.0, 1e3}) spread = std::max(spread, max_rel(energy(ground_state_pair(g, Bubble{1, lam})), e1));
    o.require(spread <= 1e-6, "dilation spread " + num(spread) + " <= 1e-6");
    const double oracle = std::sqrt(3.0) * pi * pi / 4;
    o.require(max_rel(e1, oracle) <= 1e-8, "E(W) rel err " + num(max_rel(e1, oracle)) + " vs sqrt3 pi^2/4");
    return o;
}

Outcome nonlinear_solver()
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    auto g = make_grid(0.001, 60, 30000, GridScheme::uniform);
    const StatePair W = ground_state_pair(g, Bubble{1, 1});
    double err[2];
    int i = 0;
    for (double h : {0.04, 0.02}) {
        const auto tr = evolve(W, 10.0, ground_params(h, 20, 5));
        double mx = 0;
        for (const auto& s : tr.snapshots)
            mx = std::max(mx, h_norm(combine(1.0, s.state, -1.0, ground_state_pair(s.state.grid_ptr(), Bubble{1, 1})), 0.1));
        err[i++] = mx;
    }
    const double order = std::log2(err[0] / err[1]);
    o.require(order >= 1.8, "ground-state H(0.1) drift order " + num(order) + " >= 1.8");

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
    auto gt = make_grid(0.001, 10, 20000, GridScheme::uniform);
    const StatePair core = make_state(gt, [&](double r) { return c0 * chi(r); }, [&](double r) { return c0 * dchi(r); },
                                      [&](double r) { return 0.5 * c0 * chi(r); });
    EvolutionParams pt = base(0.01, 6, 0);
    pt.amplitude_step = 1e-4;
    pt.blowup_ceiling = 1e3;
    const auto tt = evolve(core, 1.5, pt);
    double track = tt.blew_up ? 0.0 : inf;
    for (auto [t, a] : tt.amplitude)
        if (t < 1 && a < 1e3) track = std::max(track, std::abs(a / type_one_reference(t, 1.0) - 1));
    o.require(track < 0.01, "type-I tracking " + num(track) + " < 1%");

    double drift = 0;
    const auto tw = evolve(W, 10.0, ground_params(0.01, 30, 1));
    for (auto [t, E] : energy_drift(tw)) drift = std::max(drift, max_rel(E, energy_drift(tw).front().second));
    const auto tg = evolve(gaussian(1e-3), 10.0, base(0.01, 30, 1));
    const auto eg = energy_drift(tg);
    for (auto [t, E] : eg) drift = std::max(drift, max_rel(E, eg.front().second));
    o.require(drift <= 1e-4, "smooth-run energy drift " + num(drift) + " <= 1e-4");
    const double dt = seconds_since(t0);
    o.require(dt < 300, "runtime " + num(dt) + "s < 300s");
    return o;
}

Outcome duhamel_formula()
{
    Outcome o;
    EvolutionParams pl = base(0.02, 30, 5);
    pl.nonlinear = false;
    pl.accumulate_characteristics = true;
    const StatePair lin = gaussian(0.1);
    const auto tl = evolve(lin, 15, pl);
    const RadiationProfile gl0 = positive_profile(profile_from_data(lin, 0.0));
    const RadiationProfile glp = nonlinear_radiation_profile(tl, gl0);
    bool exact = true;
    for (std::size_t j = 0; j < glp.s().size(); ++j) exact = exact && glp.g()[j] == gl0(glp.s()[j]);
    o.require(exact, "linear G+ == G0+");

    std::vector<double> xs, ys;
    bool bound = true;
    for (double eps : {1e-2, 2e-2, 4e-2}) {
        EvolutionParams p = base(0.01, 40, 5);
        p.accumulate_characteristics = true;
        const StatePair init = gaussian(eps);
        const auto tr = evolve(init, 20, p);
        const RadiationProfile g0 = positive_profile(profile_from_data(init, 0.0));
        const RadiationProfile gp = nonlinear_radiation_profile(tr, g0);
        double l2 = 0;
        const auto& s = gp.s();
        for (std::size_t j = 0; j + 1 < s.size(); ++j) {
            const double a = gp.g()[j] - g0(s[j]), b = gp.g()[j + 1] - g0(s[j + 1]);
            l2 += 0.5 * (s[j + 1] - s[j]) * (a * a + b * b);
        }
        l2 = std::sqrt(l2);
        bound = bound && tr.acc.converged && l2 <= tr.acc.source_l1l2 / (4 * std::sqrt(pi));
        xs.push_back(std::log(eps));
        ys.push_back(std::log(l2));
    }
    o.require(bound, "||G+ - G0+|| <= ||F||_{L1L2} / (4 sqrt pi)");
    const double slope = fit_line(xs, ys).slope;
    o.require(std::abs(slope - 5) <= 0.2, "eps slope " + num(slope) + " = 5 +- 0.2");
    return o;
}

Outcome scaling_suite()
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    std::string misses;
    int n = 0, ok = 0;
    for (const auto& e : lemma_registry()) {
        const auto r = verify_scaling(e.id);
        ++n;
        if (r.within_3se)
            ++ok;
        else
            misses += " " + e.id + " (" + num(r.fitted) + " vs " + num(r.claimed) + ", 3SE " + num(3 * r.slope_se) + ")";
    }
    o.require(n == 11, std::to_string(n) + " registry entries");
    o.require(ok == n, std::to_string(ok) + "/" + std::to_string(n) + " within 3 SE" + misses);
    const double dt = seconds_since(t0);
    o.require(dt < 900, "runtime " + num(dt) + "s < 900s");
    return o;
}

Outcome elliptic()
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    const WStar a = solve_w_star();
    WStarOptions oc;
    oc.integrator = EllipticIntegrator::gauss_collocation;
    const WStar b = solve_w_star(oc);
    o.require(std::abs(a.mu0) > 1e-12, "mu0 " + num(a.mu0) + " nonzero");
    o.require(max_rel(b.mu0, a.mu0) < 1e-6, "integrator agreement " + num(max_rel(b.mu0, a.mu0)) + " < 1e-6");
    std::vector<double> bc;
    bool band = true;
    for (double c : {1e2, 1e2 * std::sqrt(10.0), 1e3, 1e3 * std::sqrt(10.0), 1e4}) {
        const EllipticSolution s = build_phi(c, a);
        bc.push_back(std::abs(s.beta) * c);
        const double r4 = report_r4(s);
        for (double r = 1e-8; r <= r4; r *= 1.1) {
            const double q = r * s.phi(r) / s.mu0;
            band = band && q >= 0.5 && q <= 1.5;
        }
    }
    const auto [lo, hi] = std::minmax_element(bc.begin(), bc.end());
    o.require(*hi / *lo <= 2, "|beta| c spread " + num(*hi / *lo) + " <= 2");
    o.require(band, "r phi / mu0 in [1/2, 3/2] on (0, r4]");
    const double res = std::max(ode_residual(a), ode_residual(b));
    o.require(res <= 1e-10, "ODE residual " + num(res) + " <= 1e-10");
    const double dt = seconds_since(t0);
    o.require(dt < 60, "runtime " + num(dt) + "s < 60s");
    return o;
}

/// lambda^{-1/2} u(r / lambda) on the dilated node set.
StatePair dilate(const StatePair& s, double lam)
{
    std::vector<double> nodes = s.grid().nodes();
    for (double& r : nodes) r *= lam;
    auto g = std::make_shared<const RadialGrid>(std::move(nodes), s.grid().scheme());
    auto sc = [&](const RadialProfile& p, double f) {
        std::vector<double> v = p.values();
        for (double& e : v) e *= f;
        return RadialProfile(g, std::move(v), p.tail_exponent());
    };
    std::optional<RadialProfile> d;
    if (s.du0) d = sc(*s.du0, std::pow(lam, -1.5));
    return StatePair(sc(s.u0, std::pow(lam, -0.5)), sc(s.u1, std::pow(lam, -1.5)), d);
}

Outcome decomposition()
{
    Outcome o;
    auto g = make_log_grid(1e-13, 1e7, 100);
    const std::vector<BubbleList> families{BubbleList({{1, 1.0}}), BubbleList({{1, 1.0}, {-1, 1e-4}}),
                                           BubbleList({{1, 1.0}, {-1, 1e-4}, {1, 1e-8}})};
    double worst = 0;
    bool signs = true;
    bool robust = true;
    for (const auto& truth : families) {
        const StatePair st = bubbles_state(g, truth);
        for (double c2 : {50.0, 100.0, 200.0}) {
            const auto r = extract_bubbles(st, zero_state(g), c2, 5);
            const bool same = r.bubbles.size() == truth.size();
            double w = same ? 0.0 : inf;
            for (std::size_t j = 0; same && j < truth.size(); ++j) {
                signs = signs && (c2 != 100 || r.bubbles[j].sign == truth[j].sign);
                robust = robust && r.bubbles[j].sign == truth[j].sign;
                w = std::max(w, max_rel(r.bubbles[j].scale, truth[j].scale));
            }
            if (c2 == 100) {
                signs = signs && same;
                worst = std::max(worst, w);
            }
            robust = robust && same && w <= 0.01;
        }
    }
    o.require(signs, "exact signs, J = 1, 2, 3");
    o.require(worst <= 0.01, "scale rel err " + num(worst) + " <= 1%");

    const StatePair st = bubbles_state(g, families[1]);
    const auto a = extract_bubbles(st, zero_state(g), 100, 5);
    double equi = 0;
    bool flip = true;
    for (double lam : {std::pow(10.0, 0.37), 1e3}) {
        const StatePair d = dilate(st, lam);
        const auto b = extract_bubbles(d, zero_state(d.grid_ptr()), 100, 5);
        if (b.bubbles.size() != a.bubbles.size()) {
            equi = inf;
            break;
        }
        for (std::size_t j = 0; j < a.bubbles.size(); ++j) {
            flip = flip && b.bubbles[j].sign == a.bubbles[j].sign;
            equi = std::max(equi, max_rel(b.bubbles[j].scale, lam * a.bubbles[j].scale));
        }
    }
    const auto n = extract_bubbles(combine(-1.0, st, 0.0, st), zero_state(g), 100, 5);
    flip = flip && n.bubbles.size() == a.bubbles.size();
    for (std::size_t j = 0; flip && j < a.bubbles.size(); ++j)
        flip = n.bubbles[j].sign == -a.bubbles[j].sign && n.bubbles[j].scale == a.bubbles[j].scale;
    o.require(equi <= 1e-8, "dilation equivariance " + num(equi) + " <= 1e-8");
    o.require(flip, "sign equivariance");
    o.require(robust, "same recovery for c2 in {50, 100, 200}");
    return o;
}

Outcome bootstrap()
{
    Outcome o;
    const BootstrapConstants c;
    const auto r = bootstrap_recursion_check(c, 10, admissible_tau(c) / 2, 200, 1e-12);
    double q = 0;
    for (double x : r.ratios) q = std::max(q, x);
    o.require(q <= 0.4 + 1e-9, "max ratio " + num(q) + " <= 2/5");
    o.require(r.M < 1e-12, "final M " + num(r.M) + " < 1e-12");
    BootstrapConstants bad;
    bad.gamma = 10;
    bool rejected = false;
    try {
        bootstrap_recursion_check(bad, 10, 0.0);
    } catch (const ValidationError&) {
        rejected = true;
    }
    o.require(rejected, "inadmissible gamma rejected");
    return o;
}

Outcome concentration()
{
    Outcome o;
    cli::ScenarioConfig cfg;
    cfg.scenario = "tau-diagnostic";
    const auto dir = std::filesystem::temp_directory_path() / "radwave_acceptance_tau";
    std::filesystem::remove_all(dir);
    const auto rep = cli::run_scenario(cfg, dir);
    o.require(rep.status != cli::ExitStatus::validation && rep.status != cli::ExitStatus::computation, rep.message);
    for (const auto& c : rep.checks) o.require(c.passed, c.name + " " + num(c.value) + " (limit " + num(c.limit) + ")");
    return o;
}

} // namespace

int main()
{
    int failed = 0;
    failed += !report(1, isometry);
    failed += !report(2, radiation_limits);
    failed += !report(3, ground_state_checks);
    failed += !report(4, nonlinear_solver);
    failed += !report(5, duhamel_formula);
    failed += !report(6, scaling_suite);
    failed += !report(7, elliptic);
    failed += !report(8, decomposition);
    failed += !report(9, bootstrap);
    failed += !report(10, concentration);
    std::printf("%d/10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
