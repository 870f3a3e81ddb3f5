#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "core_fields.hpp"
#include "ground_state.hpp"

namespace radwave {

namespace elliptic_detail {

inline double coef_a(double r)
{
    const double q = 1.0 / 3.0 + r * r;
    return 5.0 / (q * q);
}

/// Coefficients c_1..c_n of the decaying series w* = sum c_k r^{-k}.
inline std::vector<double> series_coefficients(int n)
{
    std::vector<double> am(n + 1), c(n + 1, 0.0);
    for (int m = 0; m <= n; ++m) am[m] = 5.0 * (m + 1) * (m % 2 ? -1.0 : 1.0) * std::pow(3.0, -m);
    for (int k = 1; k <= n; ++k) {
        double rhs = (k % 2 == 1) ? -am[(k - 1) / 2] : 0.0;
        for (int m = 0; k - 2 - 2 * m >= 1; ++m) rhs -= am[m] * c[k - 2 - 2 * m];
        c[k] = rhs / (k * (k + 1.0));
    }
    return c;
}

/// Series value and r*w' at r.
inline std::pair<double, double> series_eval(double r, const std::vector<double>& c)
{
    double w = 0, p = 0, ri = 1.0 / r, pw = ri;
    for (std::size_t k = 1; k < c.size(); ++k) {
        w += c[k] * pw;
        p -= static_cast<double>(k) * c[k] * pw;
        pw *= ri;
    }
    return {w, p};
}

using State2 = std::array<double, 2>;

/// Y = (w, r w') in x = ln r.
inline void rhs(const State2& y, State2& dy, double x)
{
    const double r = std::exp(x);
    const double s = r * r * coef_a(r);
    dy[0] = y[1];
    dy[1] = y[1] - s * (y[0] + r);
}

} // namespace elliptic_detail

enum class EllipticIntegrator { adaptive_rkf78, gauss_collocation };

/// Samples of the decaying solution w* on a logarithmic grid.
struct WStar {
    GridPtr grid;
    std::vector<double> w;
    std::vector<double> dw;
    double mu0 = 0.0;
    double r_infinity = 0.0;
    std::vector<double> series;

    double operator()(double r) const { return eval(r).first; }
    double derivative(double r) const { return eval(r).second; }

    /// Quintic Hermite interpolation using w, w', w'' = -a (w + r).
    std::pair<double, double> eval(double r) const
    {
        if (r >= grid->r_max()) {
            auto [v, p] = elliptic_detail::series_eval(r, series);
            return {v, p / r};
        }
        if (r <= grid->r_min()) return {w.front() + dw.front() * (r - grid->r_min()), dw.front()};
        const std::size_t i = grid->panel(r);
        const double x0 = (*grid)[i], x1 = (*grid)[i + 1], h = x1 - x0, t = (r - x0) / h;
        const double f0 = w[i], f1 = w[i + 1];
        const double d0 = dw[i] * h, d1 = dw[i + 1] * h;
        const double s0 = -elliptic_detail::coef_a(x0) * (w[i] + x0) * h * h;
        const double s1 = -elliptic_detail::coef_a(x1) * (w[i + 1] + x1) * h * h;
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), h3 = 0.5 * (t3 - 2 * t4 + t5);
        const double h4 = -4 * t3 + 7 * t4 - 3 * t5, h5 = 10 * t3 - 15 * t4 + 6 * t5;
        const double g0 = -30 * t2 + 60 * t3 - 30 * t4, g1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
        const double g2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4), g3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
        const double g4 = -12 * t2 + 28 * t3 - 15 * t4, g5 = 30 * t2 - 60 * t3 + 30 * t4;
        const double val = h0 * f0 + h1 * d0 + h2 * s0 + h3 * s1 + h4 * d1 + h5 * f1;
        const double der = (g0 * f0 + g1 * d0 + g2 * s0 + g3 * s1 + g4 * d1 + g5 * f1) / h;
        return {val, der};
    }

    RadialProfile profile() const { return RadialProfile(grid, w, 1.0); }
};

struct WStarOptions {
    double r_infinity = 1e4;
    double tol = 1e-13;
    double r_min = 1e-8;
    int per_decade = 200;
    int series_terms = 14;
    EllipticIntegrator integrator = EllipticIntegrator::adaptive_rkf78;
    int collocation_substeps = 2;
};

namespace elliptic_detail {

/// Fixed-step 4-stage Gauss collocation (order 8) between consecutive output abscissae in x.
inline void gauss_collocation(State2& y, double x0, double x1, int substeps)
{
    static const auto tab = [] {
        const auto& g = gauss_legendre(4);
        std::array<double, 4> c{}, b{};
        std::array<std::array<double, 4>, 4> a{};
        for (int i = 0; i < 4; ++i) {
            c[i] = 0.5 * (1 + g.x[i]);
            b[i] = 0.5 * g.w[i];
        }
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                auto lj = [&](double tau) {
                    double l = 1;
                    for (int m = 0; m < 4; ++m)
                        if (m != j) l *= (tau - c[m]) / (c[j] - c[m]);
                    return l;
                };
                a[i][j] = gauss_panel(lj, 0.0, c[i], g);
            }
        return std::make_tuple(c, b, a);
    }();
    const auto& [c, b, a] = tab;
    const double h = (x1 - x0) / substeps;
    for (int n = 0; n < substeps; ++n) {
        const double xn = x0 + n * h;
        Eigen::Matrix<double, 8, 8> M = Eigen::Matrix<double, 8, 8>::Identity();
        Eigen::Matrix<double, 8, 1> rhsv;
        for (int i = 0; i < 4; ++i) {
            const double r = std::exp(xn + c[i] * h);
            const double s = r * r * coef_a(r);
            // K_i = A_i (Y + h sum_j a_ij K_j) + f_i with A_i = [[0,1],[-s,1]], f_i = [0, -s r].
            for (int j = 0; j < 4; ++j) {
                M(2 * i, 2 * j + 1) -= h * a[i][j];
                M(2 * i + 1, 2 * j) += h * a[i][j] * s;
                M(2 * i + 1, 2 * j + 1) -= h * a[i][j];
            }
            rhsv(2 * i) = y[1];
            rhsv(2 * i + 1) = -s * y[0] + y[1] - s * r;
        }
        Eigen::Matrix<double, 8, 1> K = M.partialPivLu().solve(rhsv);
        for (int i = 0; i < 4; ++i) {
            y[0] += h * b[i] * K(2 * i);
            y[1] += h * b[i] * K(2 * i + 1);
        }
    }
}

} // namespace elliptic_detail

/// Decaying solution of -w'' = 5(1/3+r^2)^{-2}(w + r), integrated inward from r_infinity.
inline WStar solve_w_star(const WStarOptions& o = {})
{
    using namespace elliptic_detail;
    if (!(o.r_infinity >= 1e4)) throw ValidationError("elliptic_linearization", "r_infinity must be at least 1e4");
    if (!(o.tol >= 1e-14)) throw ValidationError("elliptic_linearization", "tolerance below 1e-14");
    WStar ws;
    ws.r_infinity = o.r_infinity;
    ws.series = series_coefficients(o.series_terms);
    ws.grid = make_log_grid(o.r_min, o.r_infinity, o.per_decade);
    const auto& x = ws.grid->nodes();
    const std::size_t n = x.size();
    ws.w.assign(n, 0.0);
    ws.dw.assign(n, 0.0);
    auto [w0, p0] = series_eval(o.r_infinity, ws.series);
    State2 y{w0, p0};
    ws.w[n - 1] = w0;
    ws.dw[n - 1] = p0 / o.r_infinity;
    if (o.integrator == EllipticIntegrator::adaptive_rkf78) {
        namespace ode = boost::numeric::odeint;
        auto stepper = ode::make_controlled(o.tol, o.tol, ode::runge_kutta_fehlberg78<State2>());
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = std::log(x[n - 1 - i]);
        std::size_t k = 0;
        auto obs = [&](const State2& s, double) {
            const std::size_t i = n - 1 - k++;
            ws.w[i] = s[0];
            ws.dw[i] = s[1] / x[i];
        };
        try {
            ode::integrate_times(stepper, rhs, y, xs.begin(), xs.end(), -1e-3, obs,
                                 ode::max_step_checker(100000));
        } catch (const std::exception& e) {
            throw ComputationError("elliptic_linearization", std::string("step-size underflow: ") + e.what());
        }
    } else {
        for (std::size_t i = n - 1; i > 0; --i) {
            gauss_collocation(y, std::log(x[i]), std::log(x[i - 1]), o.collocation_substeps);
            ws.w[i - 1] = y[0];
            ws.dw[i - 1] = y[1] / x[i - 1];
        }
    }
    for (double v : ws.w)
        if (!std::isfinite(v)) throw ComputationError("elliptic_linearization", "non-finite solution");
    // w = mu0 + w'(0) r + O(r^2): linear and quadratic extrapolation must agree.
    const double ra = x[0], rb = x[1], rc = x[2];
    const double lin = (rb * ws.w[0] - ra * ws.w[1]) / (rb - ra);
    const double quad = ws.w[0] * rb * rc / ((ra - rb) * (ra - rc)) + ws.w[1] * ra * rc / ((rb - ra) * (rb - rc)) +
                        ws.w[2] * ra * rb / ((rc - ra) * (rc - rb));
    if (std::abs(lin - quad) > 1e3 * o.tol * (1.0 + std::abs(quad)))
        throw ComputationError("elliptic_linearization", "extrapolation to r = 0 did not converge");
    ws.mu0 = quad;
    return ws;
}

/// v = r(r^2 - 1/3)(1/3 + r^2)^{-3/2}.
inline double homogeneous_v(double r)
{
    const double q = 1.0 / 3.0 + r * r;
    return r * (r * r - 1.0 / 3.0) / (q * std::sqrt(q));
}

inline double homogeneous_v_r(double r)
{
    const double q = 1.0 / 3.0 + r * r;
    const double sq = std::sqrt(q);
    return (3 * r * r - 1.0 / 3.0) / (q * sq) - 3 * r * r * (r * r - 1.0 / 3.0) / (q * q * sq);
}

struct EllipticSolution {
    double c = 0.0;
    double beta = 0.0;
    double mu0 = 0.0;
    WStar wstar;
    RadialProfile w_star;
    RadialProfile phi_profile;

    double w(double r) const { return wstar(r) + beta * homogeneous_v(r); }
    double phi(double r) const { return w(r) / r; }
    double phi_r(double r) const
    {
        const double wr = wstar.derivative(r) + beta * homogeneous_v_r(r);
        return wr / r - w(r) / (r * r);
    }
};

inline EllipticSolution build_phi(double c, const WStar& ws)
{
    if (!(c > 1.0)) throw ValidationError("elliptic_linearization", "matching radius must exceed 1");
    const double vc = homogeneous_v(c);
    if (std::abs(vc) < 1e-8) throw ComputationError("elliptic_linearization", "v(c) vanishes");
    EllipticSolution s;
    s.c = c;
    s.wstar = ws;
    s.mu0 = ws.mu0;
    if (!(std::abs(s.mu0) > 1e-10)) throw ComputationError("elliptic_linearization", "mu0 indistinguishable from zero");
    s.beta = -ws(c) / vc;
    s.w_star = ws.profile();
    std::vector<double> ph(ws.grid->size());
    for (std::size_t i = 0; i < ph.size(); ++i) ph[i] = s.phi((*ws.grid)[i]);
    s.phi_profile = RadialProfile(ws.grid, std::move(ph), 1.0);
    return s;
}

/// ||chi_{r1,r2} W_lambda^4 phi||_{L1L2}.
inline NormValue phi_channel_norm(const EllipticSolution& s, double lambda, double r1, double r2,
                                  std::optional<SpaceTimeOptions> opts = std::nullopt)
{
    if (!(lambda > 0)) throw ValidationError("elliptic_linearization", "lambda must be positive");
    if (!(r1 >= 0 && r1 <= r2 && r2 <= lambda)) throw ValidationError("elliptic_linearization", "need 0 <= r1 <= r2 <= lambda");
    if (r1 == r2) return {};
    SpaceTimeOptions o = opts ? *opts : SpaceTimeOptions::for_scales(std::min(1.0, r2 - r1), std::max({lambda, s.c, 1.0}));
    o.feature_scales.push_back(s.c);
    o.feature_scales.push_back(1.0);
    const Bubble b{1, lambda};
    Field f = [&s, b](double r, double) {
        const double W = eval_W(r, b);
        return W * W * W * W * s.phi(r);
    };
    return l1l2_norm(f, ChannelRegion::channel(r1, r2), o);
}

/// ||phi||_{dot H^1(|x| > r)}.
inline double phi_exterior_h1(const EllipticSolution& s, double r)
{
    if (!(r > 0)) throw ValidationError("elliptic_linearization", "radius must be positive");
    const double top = s.wstar.r_infinity;
    double total = 0.0;
    if (r < top) {
        std::vector<double> br{r, top};
        detail::geometric_points(br, 0.0, r, top, 16);
        br.push_back(s.c);
        br.push_back(1.0);
        br.erase(std::remove_if(br.begin(), br.end(), [&](double p) { return p < r || p > top; }), br.end());
        total = gauss_composite([&](double x) { double d = s.phi_r(x); return d * d * x * x; }, merge_breaks(br), gauss_legendre(8));
    }
    const double b = std::max(r, top);
    const double d = s.phi_r(b);
    total += d * d * b * b * b / 3.0;
    return std::sqrt(four_pi * total);
}

/// Max relative ODE residual |w_rr + a(w + r)| / (a(|w| + r)) from 8th-order differences of stored samples,
/// over nodes r >= r_from (below that the r^{-2} in w_rr = (w_xx - w_x)/r^2 amplifies rounding).
inline double ode_residual(const WStar& ws, int stride = 2, double r_from = 1e-1)
{
    static constexpr double c1[] = {0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
    static constexpr double c2[] = {-205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
    const auto& x = ws.grid->nodes();
    const double dx = std::log(x[stride] / x[0]);
    double worst = 0.0;
    for (std::size_t i = 4 * stride; i + 4 * stride < x.size(); i += stride) {
        double d1 = 0, d2 = c2[0] * ws.w[i];
        for (int k = 1; k <= 4; ++k) {
            const double fp = ws.w[i + k * stride], fm = ws.w[i - k * stride];
            d1 += c1[k] * (fp - fm);
            d2 += c2[k] * (fp + fm);
        }
        d1 /= dx;
        d2 /= dx * dx;
        const double r = x[i];
        if (r < r_from) continue;
        const double wrr = (d2 - d1) / (r * r);
        const double a = elliptic_detail::coef_a(r);
        worst = std::max(worst, std::abs(wrr + a * (ws.w[i] + r)) / (a * (std::abs(ws.w[i]) + r)));
    }
    return worst;
}

/// Largest grid radius r4 with 1/2 <= r phi(r) / mu0 <= 3/2 on (0, r4].
inline double report_r4(const EllipticSolution& s)
{
    const auto& x = s.wstar.grid->nodes();
    double r4 = 0.0;
    for (double r : x) {
        const double q = r * s.phi(r) / s.mu0;
        if (q < 0.5 || q > 1.5) break;
        r4 = r;
    }
    return r4;
}

/// Smallest c in the sweep from which |beta| c stays within [lo, hi].
inline double report_c5(const WStar& ws, const std::vector<double>& cs, double lo = 1.25, double hi = 5.0)
{
    double c5 = inf;
    for (auto it = cs.rbegin(); it != cs.rend(); ++it) {
        const double bc = std::abs(build_phi(*it, ws).beta) * *it;
        if (bc < lo || bc > hi) break;
        c5 = *it;
    }
    return c5;
}

} // namespace radwave
