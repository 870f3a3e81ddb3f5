#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"

namespace radwave {

inline constexpr double four_pi = 4.0 * std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class GridScheme { uniform, logarithmic };

class RadialGrid {
public:
    RadialGrid(std::vector<double> nodes, GridScheme scheme) : nodes_(std::move(nodes)), scheme_(scheme)
    {
        if (nodes_.size() < 2) throw ValidationError("core_fields", "grid needs at least two nodes");
        if (!(nodes_.front() > 0.0)) throw ValidationError("core_fields", "nonpositive r_min");
        for (std::size_t i = 1; i < nodes_.size(); ++i)
            if (!(nodes_[i] > nodes_[i - 1])) throw ValidationError("core_fields", "grid nodes must increase strictly");
    }

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double r_min() const noexcept { return nodes_.front(); }
    double r_max() const noexcept { return nodes_.back(); }
    GridScheme scheme() const noexcept { return scheme_; }

    /// Index i of the panel [r_i, r_{i+1}] containing r, clamped to valid panels.
    std::size_t panel(double r) const
    {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
        std::size_t i = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
        return std::min(i, nodes_.size() - 2);
    }

    bool same_nodes(const RadialGrid& o) const { return nodes_ == o.nodes_; }

private:
    std::vector<double> nodes_;
    GridScheme scheme_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(double r_min, double r_max, std::size_t n, GridScheme scheme)
{
    if (!(r_min > 0.0)) throw ValidationError("core_fields", "nonpositive r_min");
    if (n < 2) throw ValidationError("core_fields", "n < 2");
    if (!(r_max > r_min)) throw ValidationError("core_fields", "r_max must exceed r_min");
    std::vector<double> x(n);
    if (scheme == GridScheme::uniform) {
        const double h = (r_max - r_min) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) x[i] = r_min + h * static_cast<double>(i);
    } else {
        const double lq = std::log(r_max / r_min) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) x[i] = r_min * std::exp(lq * static_cast<double>(i));
    }
    x.front() = r_min;
    x.back() = r_max;
    return std::make_shared<const RadialGrid>(std::move(x), scheme);
}

/// Logarithmic grid with a fixed number of nodes per decade.
inline GridPtr make_log_grid(double r_min, double r_max, int per_decade)
{
    const auto n = static_cast<std::size_t>(std::ceil(std::log10(r_max / r_min) * per_decade)) + 1;
    return make_grid(r_min, r_max, n, GridScheme::logarithmic);
}

namespace detail {

/// Nodal derivative by 5-point Lagrange differentiation (one-sided near the ends).
inline std::vector<double> nodal_derivative(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    std::vector<double> d(n);
    const int m = static_cast<int>(std::min<std::size_t>(5, n));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t s = i >= static_cast<std::size_t>(m / 2) ? i - m / 2 : 0;
        if (s + m > n) s = n - m;
        d[i] = lagrange_derivative(&x[s], &y[s], m, x[i]);
    }
    return d;
}

} // namespace detail

class RadialProfile {
public:
    RadialProfile() = default;

    RadialProfile(GridPtr grid, std::vector<double> values, std::optional<double> tail = std::nullopt)
        : grid_(std::move(grid)), values_(std::move(values)), tail_(tail)
    {
        if (!grid_) throw ValidationError("core_fields", "profile without grid");
        if (values_.size() != grid_->size()) throw ValidationError("core_fields", "values length differs from grid length");
        if (tail_ && !(*tail_ > 0.5)) throw ValidationError("core_fields", "tail exponent must exceed 1/2");
    }

    const GridPtr& grid_ptr() const noexcept { return grid_; }
    const RadialGrid& grid() const { return *grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::optional<double> tail_exponent() const noexcept { return tail_; }
    double value(std::size_t i) const { return values_[i]; }

    /// Cubic interpolation inside the grid, power tail beyond r_max.
    double operator()(double r) const
    {
        const auto& x = grid_->nodes();
        if (r > x.back()) {
            if (tail_) return values_.back() * std::pow(r / x.back(), -*tail_);
            if (r <= x.back() * (1.0 + 1e-12)) return values_.back();
            throw ValidationError("core_fields", "evaluation beyond r_max without tail exponent");
        }
        if (r < x.front()) {
            if (r >= x.front() * (1.0 - 1e-12)) return values_.front();
            throw ValidationError("core_fields", "evaluation below r_min");
        }
        return interpolate(r);
    }

    /// Like operator() but holds the first value constant below r_min.
    double extended(double r) const { return r < grid_->r_min() ? values_.front() : (*this)(r); }

    RadialProfile scaled(double a) const
    {
        std::vector<double> v(values_);
        for (double& e : v) e *= a;
        return RadialProfile(grid_, std::move(v), tail_);
    }

    RadialProfile derivative_profile() const
    {
        return RadialProfile(grid_, detail::nodal_derivative(grid_->nodes(), values_), std::nullopt);
    }

private:
    double interpolate(double r) const
    {
        const auto& x = grid_->nodes();
        const std::size_t n = x.size();
        if (n < 4) {
            std::size_t i = grid_->panel(r);
            double w = (r - x[i]) / (x[i + 1] - x[i]);
            return values_[i] * (1 - w) + values_[i + 1] * w;
        }
        std::size_t i = grid_->panel(r);
        std::size_t s = i == 0 ? 0 : i - 1;
        if (s + 4 > n) s = n - 4;
        return lagrange4(&x[s], &values_[s], r);
    }

    GridPtr grid_;
    std::vector<double> values_;
    std::optional<double> tail_;
};

/// Energy-space pair (u0, u1) on one grid. du0 optionally carries the exact gradient.
struct StatePair {
    RadialProfile u0;
    RadialProfile u1;
    std::optional<RadialProfile> du0;

    StatePair() = default;

    StatePair(RadialProfile a, RadialProfile b, std::optional<RadialProfile> d = std::nullopt)
        : u0(std::move(a)), u1(std::move(b)), du0(std::move(d))
    {
        auto same = [](const RadialProfile& p, const RadialProfile& q) {
            return p.grid_ptr() == q.grid_ptr() || p.grid().same_nodes(q.grid());
        };
        if (!same(u0, u1)) throw ValidationError("core_fields", "state components on different grids");
        if (du0 && !same(u0, *du0)) throw ValidationError("core_fields", "gradient on a different grid");
    }

    const RadialGrid& grid() const { return u0.grid(); }
    const GridPtr& grid_ptr() const { return u0.grid_ptr(); }

    RadialProfile gradient() const { return du0 ? *du0 : u0.derivative_profile(); }
};

/// Samples analytic functions onto a grid.
template <typename F0, typename D0, typename F1>
StatePair make_state(const GridPtr& g, F0&& f0, D0&& d0, F1&& f1, std::optional<double> tail0 = std::nullopt,
                     std::optional<double> tail1 = std::nullopt)
{
    std::vector<double> a(g->size()), b(g->size()), c(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
        a[i] = f0((*g)[i]);
        c[i] = d0((*g)[i]);
        b[i] = f1((*g)[i]);
    }
    return StatePair(RadialProfile(g, std::move(a), tail0), RadialProfile(g, std::move(b), tail1),
                     RadialProfile(g, std::move(c)));
}

inline StatePair zero_state(const GridPtr& g)
{
    auto z = [](double) { return 0.0; };
    return make_state(g, z, z, z);
}

/// Linear combination a*x + b*y of states on the same grid.
inline StatePair combine(double a, const StatePair& x, double b, const StatePair& y)
{
    if (!x.grid().same_nodes(y.grid())) throw ValidationError("core_fields", "mismatched grids");
    auto lin = [&](const RadialProfile& p, const RadialProfile& q) {
        std::vector<double> v(p.values().size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * p.value(i) + b * q.value(i);
        std::optional<double> t;
        if (p.tail_exponent() && q.tail_exponent()) t = std::min(*p.tail_exponent(), *q.tail_exponent());
        return RadialProfile(p.grid_ptr(), std::move(v), t);
    };
    std::optional<RadialProfile> d;
    if (x.du0 && y.du0) d = lin(*x.du0, *y.du0);
    return StatePair(lin(x.u0, y.u0), lin(x.u1, y.u1), d);
}

namespace detail {

/// Integral over [a, b] of the piecewise-cubic interpolant of nodal values.
inline double integrate_nodal(const RadialGrid& g, const std::vector<double>& y, double a, double b)
{
    if (!(b > a)) return 0.0;
    const auto& x = g.nodes();
    const auto& rule = gauss_legendre(4);
    const std::size_t n = x.size();
    double s = 0.0;
    std::size_t i0 = g.panel(a), i1 = g.panel(b);
    for (std::size_t i = i0; i <= i1; ++i) {
        double lo = std::max(a, x[i]), hi = std::min(b, x[i + 1]);
        if (!(hi > lo)) continue;
        if (n < 4) {
            auto lin = [&](double r) { return y[i] + (y[i + 1] - y[i]) * (r - x[i]) / (x[i + 1] - x[i]); };
            s += gauss_panel(lin, lo, hi, rule);
            continue;
        }
        std::size_t st = i == 0 ? 0 : i - 1;
        if (st + 4 > n) st = n - 4;
        s += gauss_panel([&](double r) { return lagrange4(&x[st], &y[st], r); }, lo, hi, rule);
    }
    return s;
}

/// Integral of a power-law continuation g(a)(r/a)^m from lo up to a.
inline double inner_power_integral(double a, double ga, double m, double lo)
{
    if (!(m > -1.0)) throw ComputationError("core_fields", "integrand not integrable at the origin");
    return ga * a * (1.0 - std::pow(lo / a, m + 1.0)) / (m + 1.0);
}

} // namespace detail

/// Exterior energy norm ||(u0,u1)||_{H(R)}.
inline double h_norm(const StatePair& s, double R)
{
    if (R < 0) throw ValidationError("core_fields", "negative radius");
    const RadialGrid& g = s.grid();
    const auto& x = g.nodes();
    const double rmax = g.r_max();
    const auto p0 = s.u0.tail_exponent();
    const auto p1 = s.u1.tail_exponent();
    if (R > rmax && !p0) throw ValidationError("core_fields", "R beyond r_max with no tail exponent");

    const RadialProfile du = s.gradient();
    std::vector<double> dens(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        dens[i] = x[i] * x[i] * (du.value(i) * du.value(i) + s.u1.value(i) * s.u1.value(i));

    double total = 0.0;
    if (R < rmax) {
        double a = std::max(R, g.r_min());
        total += detail::integrate_nodal(g, dens, a, rmax);
        if (R < g.r_min()) {
            double m = 2.0;
            if (dens[0] > 0 && dens[1] > 0) m = std::log(dens[1] / dens[0]) / std::log(x[1] / x[0]);
            if (dens[0] > 0) total += detail::inner_power_integral(x[0], dens[0], m, R);
        }
    }
    const double b = std::max(R, rmax);
    if (p0) {
        const double A2 = s.u0.values().back() * s.u0.values().back() * std::pow(rmax, 2 * *p0);
        total += *p0 * *p0 * A2 * std::pow(b, 1 - 2 * *p0) / (2 * *p0 - 1);
    }
    const double v1 = s.u1.values().back();
    if (v1 != 0.0 && (p1 || p0)) {
        if (!p1 || !(*p1 > 1.5)) throw ComputationError("core_fields", "velocity tail not square integrable");
        const double A2 = v1 * v1 * std::pow(rmax, 2 * *p1);
        total += A2 * std::pow(b, 3 - 2 * *p1) / (2 * *p1 - 3);
    }
    return std::sqrt(four_pi * std::max(total, 0.0));
}

/// Space-time region: |t| + r1 < r < |t| + r2, floor < r + |t| < cap.
struct ChannelRegion {
    enum class Kind { exterior, channel, truncated_channel };
    Kind kind = Kind::exterior;
    double r1 = 0.0;
    double r2 = inf;
    double cap = inf;
    double floor = 0.0;

    static ChannelRegion exterior(double R)
    {
        if (R < 0) throw ValidationError("core_fields", "negative exterior radius");
        return {Kind::exterior, R, inf, inf, 0.0};
    }
    static ChannelRegion channel(double a, double b)
    {
        if (!(a >= 0 && a < b)) throw ValidationError("core_fields", "channel needs 0 <= R1 < R2");
        return {Kind::channel, a, b, inf, 0.0};
    }
    static ChannelRegion truncated(double a, double b, double S)
    {
        if (!(a >= 0 && a < b)) throw ValidationError("core_fields", "channel needs 0 <= R1 < R2");
        if (!(S > b)) throw ValidationError("core_fields", "cap must exceed R2");
        return {Kind::truncated_channel, a, b, S, 0.0};
    }
    /// Channel with the tip removed: additionally r + |t| > S.
    static ChannelRegion beyond(double a, double b, double S)
    {
        auto c = channel(a, b);
        if (S < 0) throw ValidationError("core_fields", "negative floor");
        c.floor = S;
        return c;
    }

    /// Radial slice (lo, hi) at time t; empty when hi <= lo.
    std::pair<double, double> slice(double t) const
    {
        const double at = std::abs(t);
        return {std::max(at + r1, floor - at), std::min(at + r2, cap - at)};
    }

    bool contains(double r, double t) const
    {
        auto [lo, hi] = slice(t);
        return r > lo && r < hi;
    }

    /// |t| values where the slice bounds change formula.
    std::vector<double> kinks() const
    {
        std::vector<double> k;
        for (double v : {(floor - r1) / 2, (floor - r2) / 2, (cap - r2) / 2, (cap - r1) / 2})
            if (std::isfinite(v) && v > 0) k.push_back(v);
        return k;
    }

    /// Largest |t| with a nonempty slice.
    double time_extent() const { return std::isfinite(cap) ? (cap - r1) / 2 : inf; }
};

struct NormValue {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    double t_window = 0.0;
};

using Field = std::function<double(double r, double t)>;

/// Quadrature controls for the space-time norms.
struct SpaceTimeOptions {
    double T = 1e4;
    double t_min = 1e-4;
    int time_panels_per_decade = 8;
    double r_scale_min = 1e-4;
    double r_far = 1e8;
    int space_panels_per_decade = 4;
    int channel_panels = 16;
    int gauss_points = 8;
    std::optional<double> time_decay_exponent;
    std::vector<double> feature_scales;

    static SpaceTimeOptions for_scales(double lo, double hi)
    {
        SpaceTimeOptions o;
        o.T = 1e4 * hi;
        o.t_min = 1e-4 * lo;
        o.r_scale_min = 1e-4 * lo;
        o.r_far = 1e8 * hi;
        o.feature_scales = {lo, hi};
        return o;
    }
};

namespace detail {

inline void geometric_points(std::vector<double>& pts, double origin, double from, double to, int per_decade)
{
    if (!(to > from) || !(from > 0)) return;
    const int k0 = static_cast<int>(std::floor(std::log10(from) * per_decade));
    const int k1 = static_cast<int>(std::ceil(std::log10(to) * per_decade));
    for (int k = k0; k <= k1; ++k) {
        double d = std::pow(10.0, static_cast<double>(k) / per_decade);
        if (d > from && d < to) pts.push_back(origin + d);
    }
    pts.push_back(origin + from);
}

struct SliceResult {
    double integral = 0.0;
    double tail = 0.0;
};

template <typename Dens>
SliceResult slice_integral(Dens&& dens, double lo, double hi, const SpaceTimeOptions& o, int level,
                           const GaussRule& rule)
{
    SliceResult res;
    const bool infinite = !std::isfinite(hi);
    const double top = infinite ? lo + o.r_far : hi;
    const double span = top - lo;
    std::vector<double> pts{lo, top};
    const int ppd = o.space_panels_per_decade * level;
    geometric_points(pts, lo, std::min(o.r_scale_min, span / 4), span, ppd);
    if (!infinite) {
        const int m = o.channel_panels * level;
        for (int j = 1; j < m; ++j) pts.push_back(lo + span * j / m);
    }
    geometric_points(pts, 0.0, lo > 0 ? lo : o.r_scale_min, top, ppd);
    for (double f : o.feature_scales)
        if (f > lo && f < top) pts.push_back(f);
    pts.erase(std::remove_if(pts.begin(), pts.end(), [&](double p) { return p < lo || p > top; }), pts.end());
    auto br = merge_breaks(std::move(pts));
    double prev = 0.0, last = 0.0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        double v = gauss_panel(dens, br[i], br[i + 1], rule);
        res.integral += v;
        prev = last;
        last = v;
    }
    if (infinite && last > 0) {
        double q = prev > 0 ? last / prev : 1.0;
        res.tail = q < 1.0 ? last * q / (1.0 - q) : last;
    }
    return res;
}

struct OuterResult {
    double value = 0.0;
    double tail_err = 0.0;
};

inline OuterResult spacetime_pass(const Field& f, const ChannelRegion& reg, const SpaceTimeOptions& o, double p,
                                  double q, int level)
{
    const auto& rule = gauss_legendre(o.gauss_points);
    const double T = std::min(o.T, reg.time_extent());
    const int ppd = o.time_panels_per_decade * level;
    std::vector<double> tp{0.0, T};
    // The refined pass also reaches 100x closer to t = 0, so growth there exposes non-integrable singularities.
    const double t_min = level == 1 ? o.t_min : o.t_min / 100;
    geometric_points(tp, 0.0, std::min(t_min, T / 4), T, ppd);
    for (double k : reg.kinks())
        if (k < T) tp.push_back(k);
    for (double s : o.feature_scales)
        if (s < T) tp.push_back(s);
    auto tb = merge_breaks(std::move(tp));

    OuterResult out;
    double space_err = 0.0;
    for (int sign : {1, -1}) {
        double prev = 0.0, last = 0.0, g_end = 0.0;
        for (std::size_t i = 0; i + 1 < tb.size(); ++i) {
            const double a = tb[i], b = tb[i + 1];
            const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
            double panel = 0.0;
            for (std::size_t k = 0; k < rule.x.size(); ++k) {
                const double t = sign * (mid + half * rule.x[k]);
                auto [lo, hi] = reg.slice(t);
                if (!(hi > lo)) continue;
                auto dens = [&](double r) {
                    double v = f(r, t);
                    if (!std::isfinite(v)) throw ComputationError("core_fields", "field evaluation failure inside region");
                    return std::pow(std::abs(v), q) * four_pi * r * r;
                };
                SliceResult sr = slice_integral(dens, lo, hi, o, level, rule);
                double gi = std::pow(sr.integral, p / q);
                panel += rule.w[k] * half * gi;
                if (sr.tail > 0) space_err += rule.w[k] * half * (std::pow(sr.integral + sr.tail, p / q) - gi);
                if (i + 2 == tb.size() && k + 1 == rule.x.size()) g_end = gi;
            }
            out.value += panel;
            prev = last;
            last = panel;
        }
        if (T < reg.time_extent() && last > 0) {
            if (o.time_decay_exponent && *o.time_decay_exponent > 1.0)
                out.tail_err += g_end * T / (*o.time_decay_exponent - 1.0);
            else {
                double ratio = prev > 0 ? last / prev : 1.0;
                out.tail_err += ratio < 1.0 ? last * ratio / (1.0 - ratio) : last;
            }
        }
    }
    out.tail_err += space_err;
    return out;
}

inline NormValue spacetime_norm(const Field& f, const ChannelRegion& reg, const SpaceTimeOptions& o, double p,
                                double q)
{
    if (!(o.T > 0)) throw ValidationError("core_fields", "time window must be positive");
    OuterResult coarse = spacetime_pass(f, reg, o, p, q, 1);
    OuterResult fine = spacetime_pass(f, reg, o, p, q, 2);
    const double diff = std::abs(fine.value - coarse.value);
    if (coarse.value > 0 && diff > 0.25 * fine.value)
        throw ComputationError("core_fields", "non-integrable singularity detected (integrand grows under refinement)");
    NormValue nv;
    nv.value = std::pow(fine.value, 1.0 / p);
    const double err = diff + fine.tail_err;
    nv.abs_error_estimate = std::pow(fine.value + err, 1.0 / p) - nv.value;
    nv.t_window = std::min(o.T, reg.time_extent());
    return nv;
}

} // namespace detail

/// Strichartz norm L^5_t L^10_x over a region.
inline NormValue y_norm(const Field& f, const ChannelRegion& reg, const SpaceTimeOptions& o = {})
{
    return detail::spacetime_norm(f, reg, o, 5.0, 10.0);
}

/// L^1_t L^2_x norm over a region.
inline NormValue l1l2_norm(const Field& f, const ChannelRegion& reg, const SpaceTimeOptions& o = {})
{
    return detail::spacetime_norm(f, reg, o, 1.0, 2.0);
}

} // namespace radwave
