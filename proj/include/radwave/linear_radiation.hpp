#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "core_fields.hpp"

namespace radwave {

/// Piecewise-linear profile s -> G(s). Repeated abscissae encode jumps; G = 0 outside the sampled range.
class RadiationProfile {
public:
    RadiationProfile() : RadiationProfile(std::vector<double>{-1.0, 1.0}, std::vector<double>{0.0, 0.0}) {}

    RadiationProfile(std::vector<double> s, std::vector<double> g, double exterior_radius = 0.0, double residue = 0.0)
        : s_(std::move(s)), g_(std::move(g)), R_(exterior_radius), residue_(residue)
    {
        if (s_.size() != g_.size() || s_.size() < 2) throw ValidationError("linear_radiation", "profile needs matching s and G of length >= 2");
        if (R_ < 0) throw ValidationError("linear_radiation", "negative exterior radius");
        if (R_ == 0.0 && residue_ != 0.0) throw ValidationError("linear_radiation", "residue must vanish for R = 0");
        for (std::size_t i = 1; i < s_.size(); ++i)
            if (s_[i] < s_[i - 1]) throw ValidationError("linear_radiation", "s grid must be nondecreasing");
        for (std::size_t i = 0; i + 2 < s_.size(); ++i)
            if (s_[i] == s_[i + 2]) throw ValidationError("linear_radiation", "at most two samples per abscissa");
        for (double v : g_)
            if (!std::isfinite(v)) throw ValidationError("linear_radiation", "non-finite sample");
        build();
    }

    /// G = 1 on (a, b), 0 elsewhere.
    static RadiationProfile indicator(double a, double b, double height = 1.0)
    {
        if (!(b > a)) throw ValidationError("linear_radiation", "empty indicator");
        return RadiationProfile({a, a, b, b}, {0.0, height, height, 0.0});
    }

    template <typename F>
    static RadiationProfile sample(F&& f, double lo, double hi, std::size_t n)
    {
        std::vector<double> s(n), g(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
            g[i] = f(s[i]);
        }
        return RadiationProfile(std::move(s), std::move(g));
    }

    const std::vector<double>& s() const noexcept { return s_; }
    const std::vector<double>& g() const noexcept { return g_; }
    double exterior_radius() const noexcept { return R_; }
    double residue() const noexcept { return residue_; }
    double s_lo() const { return s_.front(); }
    double s_hi() const { return s_.back(); }

    /// Right-continuous value.
    double operator()(double x) const
    {
        guard_point(x);
        return raw_value(x);
    }

    /// Limit from the left.
    double left_value(double x) const
    {
        guard_point(x);
        if (x <= s_.front() || x > s_.back()) return 0.0;
        auto it = std::lower_bound(s_.begin(), s_.end(), x);
        std::size_t j = static_cast<std::size_t>(it - s_.begin());
        if (s_[j] == x) return g_[j];
        return segment_value(j - 1, x);
    }

    /// int_{-inf}^{x} G, with the residue standing in for (-R, R).
    double primitive(double x) const
    {
        if (R_ > 0 && x > -R_ && x < R_) throw ValidationError("linear_radiation", "read inside the excluded interval |s| < R");
        double v = raw_primitive(x);
        if (R_ > 0 && x >= R_) v += residue_ - (raw_primitive(R_) - raw_primitive(-R_));
        return v;
    }

    double integral(double a, double b) const { return primitive(b) - primitive(a); }

    /// int_{-inf}^{x} primitive.
    double second_primitive(double x) const
    {
        if (R_ > 0) throw ValidationError("linear_radiation", "second primitive needs full-line data");
        if (x <= s_.front()) return 0.0;
        if (x >= s_.back()) return K_.back() + H_.back() * (x - s_.back());
        std::size_t i = seg(x);
        const double h = s_[i + 1] - s_[i], u = x - s_[i];
        return K_[i] + H_[i] * u + g_[i] * u * u / 2 + (g_[i + 1] - g_[i]) * u * u * u / (6 * h);
    }

    /// int_a^b G^2 (full-line data only inside (-R, R)).
    double integral_sq(double a, double b) const
    {
        if (!(b > a)) return 0.0;
        return cum_sq(b) - cum_sq(a);
    }

    double integral_abs(double a, double b) const
    {
        if (!(b > a)) return 0.0;
        return cum_abs(b) - cum_abs(a);
    }

    /// ||G||^2 over |s| > r.
    double l2_sq_outside(double r) const
    {
        r = std::max(r, 0.0);
        return cum_sq(-r) + (Q_.back() - cum_sq(r));
    }

    double l2_sq() const
    {
        if (R_ > 0) throw ValidationError("linear_radiation", "full L2 norm undefined for exterior data");
        return Q_.back();
    }

    RadiationProfile scaled(double a) const
    {
        std::vector<double> g(g_);
        for (double& v : g) v *= a;
        return RadiationProfile(s_, std::move(g), R_, a * residue_);
    }

private:
    void build()
    {
        const std::size_t n = s_.size();
        H_.assign(n, 0.0);
        K_.assign(n, 0.0);
        Q_.assign(n, 0.0);
        A_.assign(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = s_[i + 1] - s_[i], a = g_[i], b = g_[i + 1];
            H_[i + 1] = H_[i] + h * (a + b) / 2;
            K_[i + 1] = K_[i] + H_[i] * h + a * h * h / 2 + (b - a) * h * h / 6;
            Q_[i + 1] = Q_[i] + h * (a * a + a * b + b * b) / 3;
            A_[i + 1] = A_[i] + abs_segment(a, b, h);
        }
    }

    static double abs_segment(double a, double b, double h)
    {
        if (h == 0.0) return 0.0;
        if (a * b >= 0) return h * (std::abs(a) + std::abs(b)) / 2;
        return h * (a * a + b * b) / (2 * (std::abs(a) + std::abs(b)));
    }

    void guard_point(double x) const
    {
        if (R_ > 0 && x > -R_ && x < R_) throw ValidationError("linear_radiation", "read inside the excluded interval |s| < R");
    }

    /// Segment i with s_i <= x < s_{i+1} and positive length.
    std::size_t seg(double x) const
    {
        auto it = std::upper_bound(s_.begin(), s_.end(), x);
        return static_cast<std::size_t>(it - s_.begin()) - 1;
    }

    double segment_value(std::size_t i, double x) const
    {
        const double h = s_[i + 1] - s_[i];
        if (h == 0.0) return g_[i + 1];
        return g_[i] + (g_[i + 1] - g_[i]) * (x - s_[i]) / h;
    }

    double raw_value(double x) const
    {
        if (x < s_.front() || x > s_.back()) return 0.0;
        if (x == s_.back()) return g_.back();
        return segment_value(seg(x), x);
    }

    double raw_primitive(double x) const
    {
        if (x <= s_.front()) return 0.0;
        if (x >= s_.back()) return H_.back();
        std::size_t i = seg(x);
        const double u = x - s_[i];
        return H_[i] + u * (g_[i] + segment_value(i, x)) / 2;
    }

    double cum_sq(double x) const
    {
        if (x <= s_.front()) return 0.0;
        if (x >= s_.back()) return Q_.back();
        std::size_t i = seg(x);
        const double u = x - s_[i], a = g_[i], b = segment_value(i, x);
        return Q_[i] + u * (a * a + a * b + b * b) / 3;
    }

    double cum_abs(double x) const
    {
        if (x <= s_.front()) return 0.0;
        if (x >= s_.back()) return A_.back();
        std::size_t i = seg(x);
        return A_[i] + abs_segment(g_[i], segment_value(i, x), x - s_[i]);
    }

    std::vector<double> s_, g_;
    double R_ = 0.0;
    double residue_ = 0.0;
    std::vector<double> H_, K_, Q_, A_;
};

/// G_+(s) = -G_-(-s).
inline RadiationProfile positive_profile(const RadiationProfile& gm)
{
    const std::size_t n = gm.s().size();
    std::vector<double> s(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = -gm.s()[n - 1 - i];
        g[i] = -gm.g()[n - 1 - i];
    }
    return RadiationProfile(std::move(s), std::move(g), gm.exterior_radius(), -gm.residue());
}

/// Free wave u(r,t) = (1/r) int_{t-r}^{t+r} G with its first derivatives.
class FreeWave {
public:
    explicit FreeWave(RadiationProfile g) : g_(std::move(g)) {}

    const RadiationProfile& profile() const noexcept { return g_; }

    double value(double r, double t) const
    {
        check(r, t);
        return (g_.primitive(t + r) - g_.primitive(t - r)) / r;
    }
    double dt(double r, double t) const
    {
        check(r, t);
        return (g_(t + r) - g_(t - r)) / r;
    }
    double dr(double r, double t) const
    {
        check(r, t);
        return (g_(t + r) + g_(t - r)) / r - value(r, t) / r;
    }

    Field field() const
    {
        return [w = *this](double r, double t) { return w.value(r, t); };
    }

private:
    void check(double r, double t) const
    {
        if (!(r > 0)) throw ValidationError("linear_radiation", "radius must be positive");
        const double R = g_.exterior_radius();
        if (R > 0 && r < R + std::abs(t)) throw ValidationError("linear_radiation", "evaluation inside the excluded region r < R + |t|");
    }

    RadiationProfile g_;
};

inline Field free_wave_from_profile(const RadiationProfile& g) { return FreeWave(g).field(); }

/// Initial data of the free wave: u0 = (1/r) int_{-r}^{r} G, u1 = (G(r) - G(-r))/r.
inline StatePair data_from_profile(const RadiationProfile& g, const GridPtr& grid)
{
    const double R = g.exterior_radius();
    if (R > 0 && grid->r_min() < R) throw ValidationError("linear_radiation", "grid extends below R for exterior data");
    const std::size_t n = grid->size();
    std::vector<double> u0(n), u1(n), d0(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (*grid)[i];
        const double gp = g(r), gm = g.left_value(-r);
        u0[i] = (g.primitive(r) - g.primitive(-r)) / r;
        u1[i] = (gp - gm) / r;
        d0[i] = (gp + gm) / r - u0[i] / r;
    }
    const double reach = std::max(std::abs(g.s_lo()), std::abs(g.s_hi()));
    std::optional<double> t0, t1;
    if (grid->r_max() >= reach) {
        t0 = 1.0;
        t1 = 2.0;
    }
    return StatePair(RadialProfile(grid, std::move(u0), t0), RadialProfile(grid, std::move(u1), t1),
                     RadialProfile(grid, std::move(d0)));
}

/// Inverts the data formulas on |s| > R: G(+-s) = ((r u0)'(s) +- s u1(s))/2.
inline RadiationProfile profile_from_data(const StatePair& st, double R)
{
    if (R < 0) throw ValidationError("linear_radiation", "negative radius");
    const RadialGrid& g = st.grid();
    const auto& x = g.nodes();
    std::vector<double> du;
    if (st.du0) {
        du = st.du0->values();
    } else {
        du = st.u0.derivative_profile().values();
        // Smoothness pre-check: 4th- and 2nd-order derivatives must agree to well below the signal.
        double diff = 0, scale = 0;
        for (std::size_t i = 1; i + 1 < x.size(); ++i) {
            const double d2 = (st.u0.value(i + 1) - st.u0.value(i - 1)) / (x[i + 1] - x[i - 1]);
            diff = std::max(diff, std::abs(d2 - du[i]) * x[i]);
            scale = std::max(scale, std::abs(du[i]) * x[i] + std::abs(st.u0.value(i)));
        }
        if (diff > 1e-2 * scale) throw ComputationError("linear_radiation", "grid too coarse for differentiation (noise amplification test failed)");
    }
    std::vector<double> pos_s, pos_g, neg_s, neg_g;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < R) continue;
        const double ru = st.u0.value(i) + x[i] * du[i];
        const double su = x[i] * st.u1.value(i);
        pos_s.push_back(x[i]);
        pos_g.push_back(0.5 * (ru + su));
        neg_s.push_back(-x[i]);
        neg_g.push_back(0.5 * (ru - su));
    }
    if (pos_s.empty()) throw ValidationError("linear_radiation", "no grid nodes beyond R");
    std::vector<double> s(neg_s.rbegin(), neg_s.rend()), gv(neg_g.rbegin(), neg_g.rend());
    s.insert(s.end(), pos_s.begin(), pos_s.end());
    gv.insert(gv.end(), pos_g.begin(), pos_g.end());
    const double residue = R > 0 ? R * st.u0(R) : 0.0;
    return RadiationProfile(std::move(s), std::move(gv), R, residue);
}

/// Suprema of P(r)/r^p for nondecreasing P over [lo, hi]: dyadic ladder plus branch-and-bound.
template <typename P>
double sup_monotone_ratio(P&& Pf, double p, double lo, double hi, double anchor, double rel_tol = 1e-9, int per_octave = 8)
{
    if (!(hi > lo) || !(lo > 0)) return lo > 0 ? Pf(lo) / std::pow(lo, p) : 0.0;
    std::vector<double> pts{lo, hi};
    const double step = std::pow(2.0, 1.0 / per_octave);
    const int k0 = static_cast<int>(std::floor(std::log(lo / anchor) / std::log(step)));
    const int k1 = static_cast<int>(std::ceil(std::log(hi / anchor) / std::log(step)));
    for (int k = k0; k <= k1; ++k) {
        const double r = anchor * std::pow(step, k);
        if (r > lo && r < hi) pts.push_back(r);
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> val(pts.size());
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        val[i] = Pf(pts[i]);
        best = std::max(best, val[i] / std::pow(pts[i], p));
    }
    struct Item { double a, b, pb; };
    std::vector<Item> stack;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) stack.push_back({pts[i], pts[i + 1], val[i + 1]});
    int budget = 200000;
    while (!stack.empty() && budget-- > 0) {
        Item it = stack.back();
        stack.pop_back();
        const double ub = it.pb / std::pow(it.a, p);
        if (ub <= best * (1 + rel_tol) || it.b / it.a - 1 < 1e-13) continue;
        const double m = std::sqrt(it.a * it.b);
        const double pm = Pf(m);
        best = std::max(best, pm / std::pow(m, p));
        stack.push_back({it.a, m, pm});
        stack.push_back({m, it.b, it.pb});
    }
    return best;
}

struct ConcentrationReport {
    double term_sup_window = 0.0;
    double term_y_norm = 0.0;
    double term_l1_sup = 0.0;
    double total = 0.0;
};

namespace detail {

/// Smallest positive |s_i|, the scale below which G is linear on each side of 0.
inline double inner_linear_scale(const RadiationProfile& g)
{
    double m = inf;
    for (double s : g.s())
        if (s != 0.0) m = std::min(m, std::abs(s));
    return m;
}

} // namespace detail

inline ConcentrationReport concentration_tau(const RadiationProfile& g, double y_norm_vL, double lambda)
{
    if (!(lambda > 0)) throw ValidationError("linear_radiation", "lambda must be positive");
    if (g.exterior_radius() > 0) throw ValidationError("linear_radiation", "concentration diagnostics need full-line profiles");
    if (y_norm_vL < 0) throw ValidationError("linear_radiation", "negative Y norm");
    ConcentrationReport rep;
    const double eps = std::min(detail::inner_linear_scale(g), lambda);
    auto sq = [&](double r) { return g.integral_sq(-r, r); };
    const double g0p = g(0.0), g0m = g.left_value(0.0);
    double s1 = std::max(g0p * g0p + g0m * g0m, sq(eps) / eps);
    s1 = std::max(s1, sup_monotone_ratio(sq, 1.0, eps, lambda, lambda));
    rep.term_sup_window = std::sqrt(lambda * s1);

    auto ab = [&](double r) { return g.integral_abs(-r, r); };
    const double reach = std::max(std::abs(g.s_lo()), std::abs(g.s_hi()));
    // Below `tiny` the ratio is at most 2 max|G| tiny^{1/2}, negligible.
    const double tiny = eps * 1e-8;
    rep.term_l1_sup = sup_monotone_ratio(ab, 0.5, tiny, std::max(reach, 2 * tiny), lambda);
    rep.term_y_norm = y_norm_vL;
    rep.total = rep.term_sup_window + rep.term_y_norm + rep.term_l1_sup;
    return rep;
}

enum class Direction { plus, minus };

/// g_-(t) = sup_r (1/r) int_t^{t+r} |G_-|^2; g_+ evaluated at -t uses G_+ = -G_-(-.) on [-t, -t + r].
inline std::function<double(double)> maximal_function(const RadiationProfile& gm, Direction dir)
{
    if (gm.exterior_radius() > 0) throw ValidationError("linear_radiation", "maximal function needs full-line profiles");
    RadiationProfile g = dir == Direction::minus ? gm : positive_profile(gm);
    return [g, dir](double t) {
        const double x = dir == Direction::minus ? t : -t;
        if (x >= g.s_hi()) return 0.0;
        auto it = std::upper_bound(g.s().begin(), g.s().end(), x);
        const double next = *it;
        const double r_lo = next - x;
        const double r_hi = g.s_hi() - x;
        auto P = [&](double r) { return g.integral_sq(x, x + r); };
        const double gx = g(x);
        double best = std::max(gx * gx, P(r_lo) / r_lo);
        if (r_hi > r_lo) best = std::max(best, sup_monotone_ratio(P, 1.0, r_lo, r_hi, r_lo));
        return best;
    };
}

/// Continuous piecewise-linear G on [-S, S] with n interior knots of uniform random height in [-1, 1].
/// With zero_mean the knot heights are shifted so that int G = 0.
inline RadiationProfile random_profile(std::uint64_t seed, double S, std::size_t n, bool zero_mean = false)
{
    if (!(S > 0) || n < 1) throw ValidationError("linear_radiation", "need S > 0 and at least one knot");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> s(n + 2), g(n + 2, 0.0);
    const double h = 2 * S / static_cast<double>(n + 1);
    for (std::size_t i = 0; i < n + 2; ++i) s[i] = -S + h * static_cast<double>(i);
    s.back() = S;
    double mean = 0.0;
    for (std::size_t i = 1; i <= n; ++i) mean += (g[i] = u(rng));
    mean /= static_cast<double>(n);
    if (zero_mean)
        for (std::size_t i = 1; i <= n; ++i) g[i] -= mean;
    return RadiationProfile(std::move(s), std::move(g));
}

struct IsometrySides {
    /// ||(u0, u1)||^2_{H(R)} by quadrature of the sampled data.
    double energy_sq = 0.0;
    /// 8 pi ||G||^2_{L2(|s|>R)} + 4 pi R u0(R)^2 with u0(R) exact.
    double profile_side = 0.0;
};

inline IsometrySides isometry_sides(const RadiationProfile& g, double R, const GridPtr& grid)
{
    if (g.exterior_radius() > 0) throw ValidationError("linear_radiation", "isometry check takes a full-line profile");
    const StatePair st = data_from_profile(g, grid);
    IsometrySides out;
    const double e = h_norm(st, R);
    out.energy_sq = e * e;
    const double u0R = R > 0 ? g.integral(-R, R) / R : 0.0;
    out.profile_side = 8 * std::numbers::pi * g.l2_sq_outside(R) + four_pi * R * u0R * u0R;
    return out;
}

struct RadiationDefects {
    /// int_0^inf |r u_t(r,t) - G_+(r - t)|^2 dr
    double time_defect = 0.0;
    /// int_0^inf |r u_r(r,t) + G_+(r - t)|^2 dr
    double radial_defect = 0.0;
};

/// Defects between the free wave of G_- at time t and its outgoing radiation profile.
inline RadiationDefects radiation_defects(const RadiationProfile& gm, double t)
{
    if (gm.exterior_radius() > 0) throw ValidationError("linear_radiation", "defects need full-line profiles");
    if (!(t > 0)) throw ValidationError("linear_radiation", "time must be positive");
    const FreeWave w(gm);
    const RadiationProfile gp = positive_profile(gm);
    std::vector<double> br{0.0};
    for (double s : gm.s()) {
        br.push_back(std::abs(t - s));
        br.push_back(s - t);
    }
    const double r_end = std::max({t - gm.s_lo(), gm.s_hi() - t, 1.0}) * 1.5;
    br.push_back(r_end);
    std::sort(br.begin(), br.end());
    br.erase(std::remove_if(br.begin(), br.end(), [&](double r) { return r < 0 || r > r_end; }), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    std::vector<double> fine;
    for (std::size_t i = 0; i + 1 < br.size(); ++i)
        for (int k = 0; k < 8; ++k) fine.push_back(br[i] + (br[i + 1] - br[i]) * k / 8.0);
    fine.push_back(br.back());
    const auto& rule = gauss_legendre(16);
    RadiationDefects d;
    d.time_defect = gauss_composite([&](double r) { const double e = r * w.dt(r, t) - gp(r - t); return e * e; }, fine, rule);
    d.radial_defect = gauss_composite([&](double r) { const double e = r * w.dr(r, t) + gp(r - t); return e * e; }, fine, rule);
    // Beyond r_end the wave is M/r with M = int G, so r u_r = -M/r.
    const double m = r_end * w.value(r_end, t);
    d.radial_defect += m * m / r_end;
    return d;
}

/// Largest kappa |{t in [lo, hi] : g(t) > kappa}| over the given levels, measured on an n-point grid.
inline double weak_type_constant(const std::function<double(double)>& g, const std::vector<double>& kappas, double lo, double hi,
                                 std::size_t n = 4000)
{
    if (!(hi > lo) || n < 2) throw ValidationError("linear_radiation", "bad sampling window");
    std::vector<double> v(n + 1);
    const double dt = (hi - lo) / n;
    for (std::size_t i = 0; i <= n; ++i) v[i] = g(lo + dt * i);
    double c = 0.0;
    for (double k : kappas) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = v[i] - k, b = v[i + 1] - k;
            if (a > 0 && b > 0) m += dt;
            else if (a > 0 || b > 0) m += dt * std::max(a, b) / (std::abs(a) + std::abs(b));
        }
        c = std::max(c, k * m);
    }
    return c;
}

} // namespace radwave
