#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core_fields.hpp"

namespace radwave {

struct Bubble {
    int sign = 1;
    double scale = 1.0;
};

/// Bubbles ordered by strictly decreasing scale.
class BubbleList {
public:
    BubbleList() = default;
    explicit BubbleList(std::vector<Bubble> b) : b_(std::move(b))
    {
        for (std::size_t i = 0; i < b_.size(); ++i) {
            if (b_[i].sign != 1 && b_[i].sign != -1) throw ValidationError("ground_state", "sign must be +1 or -1");
            if (!(b_[i].scale > 0)) throw ValidationError("ground_state", "scale must be positive");
            if (i > 0 && !(b_[i].scale < b_[i - 1].scale))
                throw ValidationError("ground_state", "scales must decrease strictly");
        }
    }

    std::size_t size() const noexcept { return b_.size(); }
    bool empty() const noexcept { return b_.empty(); }
    const Bubble& operator[](std::size_t i) const { return b_[i]; }
    const std::vector<Bubble>& items() const noexcept { return b_; }
    auto begin() const { return b_.begin(); }
    auto end() const { return b_.end(); }

    void push_back(const Bubble& b)
    {
        std::vector<Bubble> n(b_);
        n.push_back(b);
        *this = BubbleList(std::move(n));
    }

private:
    std::vector<Bubble> b_;
};

inline double eval_W(double r, const Bubble& b)
{
    if (!(b.scale > 0)) throw ValidationError("ground_state", "scale must be positive");
    const double x = r / b.scale;
    return b.sign / std::sqrt(b.scale * (1.0 / 3.0 + x * x));
}

inline double eval_W(double r) { return 1.0 / std::sqrt(1.0 / 3.0 + r * r); }

/// Radial derivative of zeta*W_lambda.
inline double eval_W_r(double r, const Bubble& b)
{
    const double x = r / b.scale;
    const double q = 1.0 / 3.0 + x * x;
    return -b.sign * x / (b.scale * std::sqrt(b.scale) * q * std::sqrt(q));
}

inline double nonlinearity(double u)
{
    const double u2 = u * u;
    return u2 * u2 * u;
}

/// Max over interior nodes of |Delta_h(zeta W_lambda) + F(zeta W_lambda)| with 3-point stencils.
inline double stationarity_residual(const Bubble& b, const RadialGrid& g)
{
    if (g.size() < 3) throw ValidationError("ground_state", "grid too coarse (< 3 nodes)");
    const auto& x = g.nodes();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        const double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
        const double um = eval_W(x[i - 1], b), u0 = eval_W(x[i], b), up = eval_W(x[i + 1], b);
        const double d2 = 2.0 * (hm * up - (hm + hp) * u0 + hp * um) / (hm * hp * (hm + hp));
        const double d1 = (hm * hm * up + (hp * hp - hm * hm) * u0 - hp * hp * um) / (hm * hp * (hm + hp));
        const double lap = d2 + 2.0 * d1 / x[i];
        worst = std::max(worst, std::abs(lap + nonlinearity(u0)));
    }
    return worst;
}

/// Sampled (zeta W_lambda, 0) with exact gradient and 1/r tail.
inline StatePair ground_state_pair(const GridPtr& g, const Bubble& b)
{
    return make_state(
        g, [&](double r) { return eval_W(r, b); }, [&](double r) { return eval_W_r(r, b); },
        [](double) { return 0.0; }, 1.0, 2.0);
}

/// Superposition of bubbles sampled on a grid.
inline StatePair bubbles_state(const GridPtr& g, const BubbleList& bl)
{
    return make_state(
        g,
        [&](double r) {
            double s = 0;
            for (const auto& b : bl) s += eval_W(r, b);
            return s;
        },
        [&](double r) {
            double s = 0;
            for (const auto& b : bl) s += eval_W_r(r, b);
            return s;
        },
        [](double) { return 0.0; }, 1.0, 2.0);
}

/// E = int (|grad u0|^2/2 + |u1|^2/2 - |u0|^6/6) over R^3.
inline double energy(const StatePair& s)
{
    const RadialGrid& g = s.grid();
    const auto& x = g.nodes();
    const RadialProfile du = s.gradient();
    std::vector<double> dens(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = s.u0.value(i), v = s.u1.value(i), d = du.value(i);
        dens[i] = x[i] * x[i] * (0.5 * d * d + 0.5 * v * v - u * u * u * u * u * u / 6.0);
    }
    double total = detail::integrate_nodal(g, dens, g.r_min(), g.r_max());
    // Origin segment: u regular, density ~ r^2 times its limit.
    total += dens[0] * x[0] / 3.0;
    const double rmax = g.r_max();
    const auto p0 = s.u0.tail_exponent();
    const auto p1 = s.u1.tail_exponent();
    const double A = s.u0.values().back(), V = s.u1.values().back();
    if (p0) {
        const double p = *p0;
        total += 0.5 * p * p * A * A * rmax / (2 * p - 1);
        total -= std::pow(A, 6) * rmax * rmax * rmax / (6.0 * (6 * p - 3));
    }
    if (V != 0.0 && p0) {
        if (!p1 || !(*p1 > 1.5)) throw ComputationError("ground_state", "divergent integral detected");
        total += 0.5 * V * V * rmax * rmax * rmax / (2 * *p1 - 3);
    }
    if (!std::isfinite(total)) throw ComputationError("ground_state", "divergent integral detected");
    return four_pi * total;
}

inline constexpr double ground_state_energy = 1.7320508075688772 * std::numbers::pi * std::numbers::pi / 4.0;

} // namespace radwave
