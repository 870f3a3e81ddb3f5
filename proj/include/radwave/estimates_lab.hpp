#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "core_fields.hpp"
#include "elliptic_linearization.hpp"
#include "ground_state.hpp"
#include "linear_radiation.hpp"

namespace radwave {

/// Worker count for sweeps; RADWAVE_THREADS overrides hardware concurrency.
inline unsigned worker_count()
{
    if (const char* e = std::getenv("RADWAVE_THREADS")) {
        const long v = std::strtol(e, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates f on every point, at most worker_count() at a time; order preserved.
template <typename T, typename F>
std::vector<T> parallel_map(const std::vector<double>& pts, F&& f)
{
    std::vector<T> out(pts.size());
    const std::size_t w = worker_count();
    for (std::size_t start = 0; start < pts.size(); start += w) {
        std::vector<std::future<T>> jobs;
        for (std::size_t i = start; i < std::min(pts.size(), start + w); ++i)
            jobs.push_back(std::async(std::launch::async, [&, i] { return f(pts[i]); }));
        for (std::size_t i = 0; i < jobs.size(); ++i) out[start + i] = jobs[i].get();
    }
    return out;
}

struct ScalingSample {
    double parameter = 0.0;
    double value = 0.0;
    double abs_error = 0.0;
};

struct ScalingReport {
    std::string lemma_id;
    std::string parameter_name;
    std::string estimate;
    double claimed = 0.0;
    double fitted = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double tolerance = 0.0;
    bool log_correction = false;
    bool passed = false;
    /// Strict rule: |fitted - claimed| <= 3 slope_se.
    bool within_3se = false;
    std::vector<ScalingSample> samples;
};

struct LemmaEntry {
    std::string id;
    std::string parameter;
    std::string estimate;
    double claimed;
    double tolerance;
    bool log_correction;
    std::vector<double> default_sweep;
    std::function<NormValue(double)> measure;
};

namespace lab_detail {

inline Field bubble_product(int pw, double lambda, int pl)
{
    return [=](double r, double) { return std::pow(eval_W(r), pw) * std::pow(eval_W(r, Bubble{1, lambda}), pl); };
}

inline Field free_wave(const RadiationProfile& g)
{
    FreeWave w(g);
    return [w](double r, double t) { return w.value(r, t); };
}

/// G(s) = sign(s)/2 on R < |s| < 2R: the profile of (0, 1_{R<r<2R}/r).
inline RadiationProfile odd_shell(double R, double height)
{
    return RadiationProfile({-2 * R, -R, -R, R, R, 2 * R}, {-height, -height, 0, 0, height, height});
}

/// Zero-data solution of box v = 1_{[0,tau]}(t) f with f = 1_{R<r<2R}/r, via the second primitive of its profile.
inline Field duhamel_shell(double R, double tau)
{
    const RadiationProfile g = odd_shell(R, 0.5);
    return [g, tau](double r, double t) {
        if (t <= 0) return 0.0;
        const double T = std::min(t, tau);
        const double K = g.second_primitive(t + r) - g.second_primitive(t - T + r) - g.second_primitive(t - r) +
                         g.second_primitive(t - T - r);
        return K / r;
    };
}

inline const EllipticSolution& phi_c10()
{
    static const EllipticSolution s = build_phi(10.0, solve_w_star());
    return s;
}

inline std::vector<LemmaEntry> make_registry()
{
    std::vector<LemmaEntry> r;
    auto opts = [](double lo, double hi, double decay) {
        SpaceTimeOptions o = SpaceTimeOptions::for_scales(lo, hi);
        o.time_decay_exponent = decay;
        return o;
    };
    r.push_back({"w-tip-removed-channel", "R", "Y norm of W on r1+|t|<r<r2+|t|, r+|t|>R: (r2-r1)^{1/10} R^{-3/5}", -0.6, 0.05,
                 false, {10, 100, 1000}, [=](double R) {
                     return y_norm([](double x, double) { return eval_W(x); }, ChannelRegion::beyond(0, 1, R),
                                   opts(1, R, 4));
                 }});
    r.push_back({"w-wlambda4-channel", "lambda", "L1L2 norm of W W_lambda^4 on channel (0,1): lambda^{-1} (r2-r1)^{1/2}",
                 -1.0, 0.05, false, {100, 1000, 10000}, [=](double l) {
                     return l1l2_norm(bubble_product(1, l, 4), ChannelRegion::channel(0, 1), opts(1, l, 4));
                 }});
    r.push_back({"w-wlambda4-global", "lambda", "L1L2 norm of W W_lambda^4 on r>|t|: lambda^{-1/2}", -0.5, 0.05, false,
                 {100, 1000, 10000}, [=](double l) {
                     return l1l2_norm(bubble_product(1, l, 4), ChannelRegion::exterior(0), opts(1, l, 3.5));
                 }});
    r.push_back({"w4-flat-wlambda", "lambda",
                 "L1L2 norm of W^4 (W_lambda - sqrt3 lambda^{-1/2}) on channel (0,1): lambda^{-5/2} ln lambda", -2.5, 0.05,
                 true, {100, 1000, 10000}, [=](double l) {
                     Field f = [l](double x, double) {
                         return std::pow(eval_W(x), 4) * (eval_W(x, Bubble{1, l}) - std::sqrt(3.0 / l));
                     };
                     return l1l2_norm(f, ChannelRegion::channel(0, 1), opts(1, l, 3));
                 }});
    r.push_back({"gap-profile-channel", "r2-r1", "Y norm of v on channel (0,d), G = 0 on |s|<R: (d/R)^{1/10} ||G||", 0.1, 0.02,
                 false, {0.1, 1, 10}, [=](double d) {
                     const double R = 100;
                     return y_norm(free_wave(RadiationProfile::indicator(R, 2 * R)), ChannelRegion::channel(0, d),
                                   opts(d, 2 * R, 4));
                 }});
    r.push_back({"inverse-r-exterior", "R0", "Y norm of 1/r on r>R0+|t|: R0^{-1/2}", -0.5, 0.05, false, {1, 10, 100},
                 [=](double R0) {
                     return y_norm(free_wave(RadiationProfile::indicator(0, R0, 1.0 / R0)), ChannelRegion::exterior(R0),
                                   opts(R0, R0, 3.5));
                 }});
    r.push_back({"velocity-gap-channel", "r2-r1", "Y norm of S(0,u1) on channel (0,d), u1 on |x|>R: (d/R)^{1/10} ||u1||", 0.1,
                 0.02, false, {0.1, 1, 10}, [=](double d) {
                     const double R = 100;
                     return y_norm(free_wave(odd_shell(R, 0.5)), ChannelRegion::channel(0, d), opts(d, 2 * R, 4));
                 }});
    r.push_back({"duhamel-gap-channel", "r2-r1", "Y norm of zero-data solution with source in r>R+|t|: (d/R)^{1/10} ||F||",
                 0.1, 0.02, false, {0.1, 1, 10}, [=](double d) {
                     const double R = 100;
                     return y_norm(duhamel_shell(R + 1, 1.0), ChannelRegion::channel(0, d), opts(d, 2 * R, 4));
                 }});
    r.push_back({"concentration-channel", "lambda", "Y norm of v_L on channel (0,1) at fixed tau: lambda^{-1/10}", -0.1, 0.02,
                 false, {100, 1000, 10000}, [=](double l) {
                     return y_norm(free_wave(RadiationProfile::indicator(0, l, 1 / std::sqrt(l))),
                                   ChannelRegion::channel(0, 1), opts(1, l, 4));
                 }});
    r.push_back({"localized-profile", "a", "Y norm of v_L on r>|t| with G_+ on [a,a+1]: ((b-a)/a)^{1/2} ||G_+||", -0.5, 0.05,
                 false, {10, 100, 1000}, [=](double a) {
                     return y_norm(free_wave(RadiationProfile::indicator(-a - 1, -a, -1.0)), ChannelRegion::exterior(0),
                                   opts(1, a + 1, 3.5));
                 }});
    r.push_back({"phi-channel", "lambda", "L1L2 norm of W_lambda^4 phi on channel (0,1), c = 10: lambda^{-1}", -1.0, 0.1, false,
                 {1000, 10000, 100000}, [](double l) { return phi_channel_norm(phi_c10(), l, 0, 1); }});
    return r;
}

} // namespace lab_detail

inline const std::vector<LemmaEntry>& lemma_registry()
{
    static const std::vector<LemmaEntry> r = lab_detail::make_registry();
    return r;
}

inline const LemmaEntry& find_lemma(const std::string& id)
{
    for (const auto& e : lemma_registry())
        if (e.id == id) return e;
    throw ValidationError("estimates_lab", "unknown lemma id: " + id);
}

/// Log-log slope fit; passes when |fitted - claimed| <= max(3 SE, tolerance).
inline ScalingReport verify_scaling(const std::string& id, std::optional<std::vector<double>> sweep = std::nullopt)
{
    const LemmaEntry& e = find_lemma(id);
    std::vector<double> pts = sweep ? *sweep : e.default_sweep;
    if (pts.size() < 3) throw ValidationError("estimates_lab", "sweep needs at least 3 points");
    std::sort(pts.begin(), pts.end());
    if (!(pts.front() > 0) || std::log10(pts.back() / pts.front()) < 1.5 - 1e-12)
        throw ValidationError("estimates_lab", "sweep too narrow (< 1.5 decades)");
    ScalingReport rep;
    rep.lemma_id = e.id;
    rep.parameter_name = e.parameter;
    rep.estimate = e.estimate;
    rep.claimed = e.claimed;
    rep.tolerance = e.tolerance;
    rep.log_correction = e.log_correction;
    const auto vals = parallel_map<NormValue>(pts, e.measure);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        rep.samples.push_back({pts[i], vals[i].value, vals[i].abs_error_estimate});
        if (!(vals[i].value > 0)) throw ComputationError("estimates_lab", "non-positive norm in sweep for " + id);
        x.push_back(std::log(pts[i]));
        double v = std::log(vals[i].value);
        if (e.log_correction) v -= std::log(std::log(pts[i]));
        y.push_back(v);
    }
    const LineFit f = fit_line(x, y);
    rep.fitted = f.slope;
    rep.slope_se = f.slope_se;
    rep.intercept = f.intercept;
    rep.passed = std::abs(f.slope - e.claimed) <= std::max(3 * f.slope_se, e.tolerance);
    rep.within_3se = std::abs(f.slope - e.claimed) <= 3 * f.slope_se;
    return rep;
}

struct InteractionConfig {
    BubbleList bubbles;
    const EllipticSolution* phi = nullptr;
    std::optional<RadiationProfile> vL;
    Field w;
    ChannelRegion region;
    SpaceTimeOptions options = SpaceTimeOptions::for_scales(1, 1e3);
};

/// The seven source terms of the error equation on a region, with lambda_J = 1 and c(J) = 1.
inline std::array<double, 7> interaction_terms(const InteractionConfig& cfg)
{
    const auto& b = cfg.bubbles;
    const std::size_t J = b.size();
    if (J < 2) throw ValidationError("estimates_lab", "interaction terms need J >= 2 (lambda_{J-1} undefined)");
    if (std::abs(b[J - 1].scale - 1.0) > 1e-12) throw ValidationError("estimates_lab", "normalize so that lambda_J = 1");
    if (!cfg.phi) throw ValidationError("estimates_lab", "missing elliptic solution");
    const double lam = b[J - 2].scale;
    const EllipticSolution& ph = *cfg.phi;
    std::optional<FreeWave> vl;
    if (cfg.vL) vl.emplace(*cfg.vL);
    auto W = [](double r) { return eval_W(r); };
    auto Wj = [&](std::size_t j, double r) { return eval_W(r, Bubble{1, b[j].scale}); };
    auto v = [&](double r, double t) { return vl ? std::abs(vl->value(r, t)) : 0.0; };
    auto w = [&](double r, double t) { return cfg.w ? std::abs(cfg.w(r, t)) : 0.0; };
    auto p4 = [](double x) { return x * x * x * x; };

    std::array<Field, 7> f;
    f[0] = [&](double r, double t) { return p4(W(r)) * w(r, t); };
    f[1] = [&](double r, double t) {
        const double ww = w(r, t);
        double s = std::pow(ww, 5) + p4(ph.phi(r)) * ww / (lam * lam) + p4(v(r, t)) * ww;
        for (std::size_t j = 0; j + 1 < J; ++j) s += p4(Wj(j, r)) * ww;
        return s;
    };
    f[2] = [&](double r, double t) {
        const double vv = v(r, t);
        double s = std::pow(vv, 5) + p4(ph.phi(r)) * vv / (lam * lam);
        for (std::size_t j = 0; j < J; ++j) s += p4(Wj(j, r)) * vv;
        return s;
    };
    f[3] = [&](double r, double) {
        const double p = std::abs(ph.phi(r));
        double s = std::pow(p, 5) * std::pow(lam, -2.5) + std::pow(W(r), 3) * p * p / lam;
        for (std::size_t j = 0; j + 1 < J; ++j) s += p4(Wj(j, r)) * p / std::sqrt(lam);
        return s;
    };
    f[4] = [&](double r, double) { return p4(W(r)) * (eval_W(r, Bubble{1, lam}) - std::sqrt(3.0 / lam)); };
    f[5] = [&](double r, double) {
        double s = std::pow(W(r), 3) * std::pow(eval_W(r, Bubble{1, lam}), 2);
        for (std::size_t j = 0; j + 2 < J; ++j) s += p4(W(r)) * Wj(j, r);
        for (std::size_t j = 0; j + 1 < J; ++j) s += W(r) * p4(Wj(j, r));
        return s;
    };
    std::array<double, 7> out{};
    for (int m = 0; m < 6; ++m) {
        const bool zero = (m == 0 && !cfg.w) || (m == 1 && !cfg.w) || (m == 2 && !cfg.vL);
        out[m] = zero ? 0.0 : l1l2_norm(f[m], cfg.region, cfg.options).value;
    }
    double s7 = 0.0;
    for (std::size_t j = 0; j + 1 < J; ++j)
        for (std::size_t m = j + 1; m + 1 < J; ++m) {
            Field g = [&, j, m](double r, double) {
                const double a = Wj(j, r), c = Wj(m, r);
                return p4(a) * c + a * p4(c);
            };
            s7 += l1l2_norm(g, cfg.region, cfg.options).value;
        }
    out[6] = s7;
    return out;
}

struct BootstrapConstants {
    double c0s = 1.0;
    double c1s = 1.0;
    double c2s = 1.0;
    double c3s = 1.0;
    double gamma = 25.0;
    double c1 = 1e-6;
    double c2 = 100.0;
};

struct RecursionState {
    int K = 0;
    double tau = 0.0;
    BootstrapConstants constants;
    std::vector<double> B, A, b, a;
    std::vector<std::vector<double>> Akl, akl;
};

struct BootstrapResult {
    double M = 0.0;
    std::vector<double> history;
    std::vector<double> ratios;
    RecursionState state;
};

/// Minimal positive K with 2^{K+1} c2 lambda_J >= c1 lambda_{J-1}.
inline int recursion_depth(double c1, double c2, double lambda_J, double lambda_Jm1)
{
    if (!(c1 > 0 && c2 > 0 && lambda_J > 0 && lambda_Jm1 > 0)) throw ValidationError("estimates_lab", "positive inputs required");
    int K = 1;
    while (std::ldexp(c2 * lambda_J, K + 1) < c1 * lambda_Jm1) ++K;
    return K;
}

/// Largest tau meeting 16 c2* max(c3*^4, 1) gamma^5 tau^4 < 1/10.
inline double admissible_tau(const BootstrapConstants& c)
{
    return std::pow(0.1 / (16 * c.c2s * std::max(std::pow(c.c3s, 4), 1.0) * std::pow(c.gamma, 5)), 0.25);
}

inline void check_admissible(const BootstrapConstants& c, double tau)
{
    if (!(c.gamma > 20 * c.c0s)) throw ValidationError("estimates_lab", "inadmissible constants: gamma > 20 c0* fails");
    if (!(c.c1s * c.gamma / (c.c2 * c.c2) < 0.1))
        throw ValidationError("estimates_lab", "inadmissible constants: c1* c2^-2 gamma < 1/10 fails");
    if (!(c.gamma * c.c2s * std::pow(c.c1, 0.4) < 0.1))
        throw ValidationError("estimates_lab", "inadmissible constants: gamma c2* c1^{2/5} < 1/10 fails");
    if (!(16 * c.c2s * std::max(std::pow(c.c3s, 4), 1.0) * std::pow(c.gamma, 5) * std::pow(tau, 4) < 0.1))
        throw ValidationError("estimates_lab", "inadmissible constants: 16 c2* max(c3*^4,1) gamma^5 tau^4 < 1/10 fails");
}

/// One sweep of the envelope map: A, A_{k,l} from B, then the new B.
inline std::vector<double> bootstrap_map(const BootstrapConstants& c, int K, const std::vector<double>& B,
                                         RecursionState* st = nullptr)
{
    const auto n = static_cast<std::size_t>(K + 1);
    if (B.size() != n) throw ValidationError("estimates_lab", "envelope length must be K + 1");
    auto p2 = [](double e) { return std::exp2(e); };
    std::vector<double> A(n, 0.0);
    std::vector<std::vector<double>> Akl(n);
    for (int k = 0; k <= K; ++k) {
        double lower = 0.0;
        for (int m = 0; m < k; ++m) lower += p2((m - k) / 2.0) * B[m];
        double s = lower;
        for (int m = k; m <= K; ++m) s += p2((k - m) / 10.0) * B[m];
        A[k] = c.c0s * s;
        Akl[k].assign(static_cast<std::size_t>(K + 2 - k), 0.0);
        double run = lower;
        for (int l = 1; l <= K + 1 - k; ++l) {
            const int m = k + l - 1;
            if (m <= K) run += p2((k - m) / 10.0) * B[m];
            Akl[k][l] = c.c0s * run;
        }
    }
    std::vector<double> Bn(n, 0.0);
    for (int k = 0; k <= K; ++k) {
        double s = 0.0;
        for (int l = 1; l <= K + 1 - k; ++l) s += p2(-2.4 * l) * Akl[k][l];
        s += p2(-2.4 * (K - k)) * A[k];
        Bn[k] = c.c1s / (c.c2 * c.c2) * p2(-2.0 * k) * s + 16 * c.c2s * std::pow(A[k], 5) +
                c.c2s * std::pow(c.c1, 0.4) * p2(0.4 * (k - K)) * A[k];
    }
    if (st) {
        st->A = A;
        st->Akl = Akl;
    }
    return Bn;
}

/// Iterates the envelope map from B_k = c3* tau; M = max_k B_k must contract by 2/5 per step.
inline BootstrapResult bootstrap_recursion_check(const BootstrapConstants& c, int K, double tau, int max_iter = 200,
                                                 double floor = 1e-300)
{
    if (K < 1) throw ValidationError("estimates_lab", "K must be positive");
    if (tau < 0) throw ValidationError("estimates_lab", "tau must be nonnegative");
    check_admissible(c, tau);
    BootstrapResult res;
    RecursionState& st = res.state;
    st.K = K;
    st.tau = tau;
    st.constants = c;
    std::vector<double> B(static_cast<std::size_t>(K + 1), c.c3s * tau);
    double M = c.c3s * tau;
    res.history.push_back(M);
    for (int it = 0; it < max_iter && M > floor; ++it) {
        B = bootstrap_map(c, K, B, &st);
        const double Mn = *std::max_element(B.begin(), B.end());
        if (Mn > M) throw ComputationError("estimates_lab", "non-contraction detected at iteration " + std::to_string(it + 1));
        res.ratios.push_back(Mn / M);
        res.history.push_back(Mn);
        M = Mn;
    }
    res.M = M;
    st.B = B;
    st.b.resize(B.size());
    st.a.resize(B.size());
    st.akl = st.Akl;
    if (st.A.empty()) {
        bootstrap_map(c, K, B, &st);
        st.akl = st.Akl;
    }
    for (int k = 0; k <= K; ++k) {
        st.b[k] = B[k] + std::exp2((k - K) / 2.0) * tau;
        st.a[k] = st.A[k] + c.gamma * std::exp2((k - K) / 10.0) * tau;
        for (int l = 1; l <= K + 1 - k; ++l)
            st.akl[k][l] = st.Akl[k][l] + c.gamma * std::exp2((k - K) / 2.0) * std::exp2(0.4 * l) * tau;
    }
    return res;
}

} // namespace radwave
