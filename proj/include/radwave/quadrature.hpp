#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace radwave {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

namespace detail {

template <int N>
GaussRule expand_rule()
{
    using boost::math::quadrature::gauss;
    const auto& a = gauss<double, N>::abscissa();
    const auto& w = gauss<double, N>::weights();
    GaussRule g;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            g.x.push_back(0.0);
            g.w.push_back(w[i]);
        } else {
            g.x.push_back(-a[i]);
            g.w.push_back(w[i]);
            g.x.push_back(a[i]);
            g.w.push_back(w[i]);
        }
    }
    return g;
}

} // namespace detail

/// Gauss-Legendre rule with 4, 8 or 16 points.
inline const GaussRule& gauss_legendre(int n)
{
    static const GaussRule g4 = detail::expand_rule<4>();
    static const GaussRule g8 = detail::expand_rule<8>();
    static const GaussRule g16 = detail::expand_rule<16>();
    switch (n) {
    case 4: return g4;
    case 8: return g8;
    case 16: return g16;
    default: throw std::invalid_argument("gauss_legendre: supported orders are 4, 8, 16");
    }
}

/// Integrates f over [a, b] with a single n-point rule.
template <typename F>
double gauss_panel(F&& f, double a, double b, const GaussRule& g)
{
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * f(mid + half * g.x[i]);
    return s * half;
}

/// Composite rule over sorted breakpoints.
template <typename F>
double gauss_composite(F&& f, const std::vector<double>& breaks, const GaussRule& g)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        if (breaks[i + 1] > breaks[i]) s += gauss_panel(f, breaks[i], breaks[i + 1], g);
    return s;
}

/// Cubic Lagrange interpolation through four points.
inline double lagrange4(const double* x, const double* y, double t)
{
    double s = 0.0;
    for (int j = 0; j < 4; ++j) {
        double l = 1.0;
        for (int m = 0; m < 4; ++m)
            if (m != j) l *= (t - x[m]) / (x[j] - x[m]);
        s += l * y[j];
    }
    return s;
}

/// Derivative of the Lagrange interpolant through n points, at t.
inline double lagrange_derivative(const double* x, const double* y, int n, double t)
{
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
        double dl = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k == j) continue;
            double prod = 1.0 / (x[j] - x[k]);
            for (int m = 0; m < n; ++m)
                if (m != j && m != k) prod *= (t - x[m]) / (x[j] - x[m]);
            dl += prod;
        }
        s += dl * y[j];
    }
    return s;
}

/// Merges breakpoint sets, dropping near-duplicates.
inline std::vector<double> merge_breaks(std::vector<double> pts, double rel = 1e-12)
{
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts) {
        if (!std::isfinite(p)) continue;
        if (out.empty() || p - out.back() > rel * std::max(1.0, std::abs(p))) out.push_back(p);
    }
    return out;
}

/// Least-squares line y = a + b x, with the standard error of b.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ssr = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = y[i] - f.intercept - f.slope * x[i];
            ssr += e * e;
        }
        f.slope_se = std::sqrt(ssr / (n - 2) / sxx);
    }
    return f;
}

} // namespace radwave
