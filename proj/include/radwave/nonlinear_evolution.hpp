#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "core_fields.hpp"
#include "ground_state.hpp"
#include "linear_radiation.hpp"

namespace radwave {

enum class Precision { binary64, binary128 };

struct EvolutionParams {
    double dr = 0.01;
    double cfl = 0.9;
    double domain_radius = 0.0;
    double snapshot_interval = 0.5;
    bool nonlinear = true;
    double blowup_ceiling = 1e6;
    /// dt <= amplitude_step / max|u|^2 when positive; resolves self-similar collapse.
    double amplitude_step = 0.0;
    bool accumulate_characteristics = false;
    double accumulator_tolerance = 1e-3;
    /// Newton-project u0 onto the discrete static solution before stepping (requires u1 = 0).
    bool discrete_equilibrium_start = false;
    Precision precision = Precision::binary64;
    /// 2: three-point Laplacian; 4: five-point Laplacian (odd reflection at the origin).
    int spatial_order = 2;
    /// 2: velocity Verlet; 4: Yoshida composition of three Verlet substeps.
    int time_order = 2;
    std::size_t max_steps = 100000000;
};

struct Snapshot {
    double time = 0.0;
    StatePair state;
    double origin_value = 0.0;
};

/// Running integrals (1/2) int (s+t) F(u(s+t,t)) dt over outgoing labels s.
struct CharacteristicAccumulator {
    bool enabled = false;
    std::vector<double> labels;
    std::vector<double> integral;
    std::vector<double> final_rate;
    double source_l1l2 = 0.0;
    double tail_estimate = 0.0;
    bool converged = true;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    double dr = 0.0;
    double dt_initial = 0.0;
    double domain_radius = 0.0;
    double cfl_ratio_max = 0.0;
    std::size_t steps = 0;
    bool blew_up = false;
    std::optional<double> blowup_time;
    std::vector<std::pair<double, double>> amplitude;
    CharacteristicAccumulator acc;
    EvolutionParams params;
};

namespace evolution_detail {

template <typename Real>
Real rabs(Real x)
{
    return x < 0 ? -x : x;
}

template <typename Real>
Real pow5_over_r4(Real psi, Real r)
{
    const Real q = psi / r;
    const Real q2 = q * q;
    return q2 * q2 * psi;
}

/// Solves a tridiagonal system in place (Thomas algorithm).
template <typename Real>
void thomas(std::vector<Real>& lo, std::vector<Real>& di, std::vector<Real>& up, std::vector<Real>& rhs)
{
    const std::size_t n = di.size();
    for (std::size_t i = 1; i < n; ++i) {
        const Real m = lo[i] / di[i - 1];
        di[i] -= m * up[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

template <typename Real>
class Evolver {
public:
    Evolver(const StatePair& init, double t_end, const EvolutionParams& p) : p_(p), t_end_(t_end)
    {
        if (!(t_end > 0)) throw ValidationError("nonlinear_evolution", "t_end must be positive");
        if (!(p.dr > 0)) throw ValidationError("nonlinear_evolution", "dr must be positive");
        if (p.spatial_order != 2 && p.spatial_order != 4) throw ValidationError("nonlinear_evolution", "spatial order must be 2 or 4");
        if (p.time_order != 2 && p.time_order != 4) throw ValidationError("nonlinear_evolution", "time order must be 2 or 4");
        if (!(p.cfl > 0 && p.cfl <= stability_limit(p)))
            throw ValidationError("nonlinear_evolution",
                                  "CFL violation: ratio must lie in (0, " + std::to_string(stability_limit(p)) + "]");
        if (p.discrete_equilibrium_start && p.spatial_order != 2)
            throw ValidationError("nonlinear_evolution", "equilibrium start needs the three-point Laplacian");
        if (!(p.domain_radius > t_end)) throw ValidationError("nonlinear_evolution", "domain radius must exceed t_end");
        n_ = static_cast<std::size_t>(std::llround(p.domain_radius / p.dr));
        h_ = p.domain_radius / static_cast<double>(n_);
        std::vector<double> nodes(n_);
        for (std::size_t i = 0; i < n_; ++i) nodes[i] = h_ * static_cast<double>(i + 1);
        grid_ = std::make_shared<const RadialGrid>(std::move(nodes), GridScheme::uniform);
        psi_.assign(n_ + 1, Real(0));
        pi_.assign(n_ + 1, Real(0));
        r_.assign(n_ + 1, Real(0));
        for (std::size_t i = 1; i <= n_; ++i) {
            r_[i] = Real(h_) * Real(static_cast<double>(i));
            const double r = h_ * static_cast<double>(i);
            psi_[i] = Real(r) * Real(sample(init.u0, r));
            pi_[i] = i < n_ ? Real(r) * Real(sample(init.u1, r)) : Real(0);
        }
        if (p.discrete_equilibrium_start) project_to_equilibrium(init);
    }

    /// Largest stable dt/h: 0.95 for leapfrog; scaled by the stencil's spectral radius and the largest Yoshida substep.
    static double stability_limit(const EvolutionParams& p)
    {
        double lim = 0.95;
        if (p.spatial_order == 4) lim *= std::sqrt(3.0) / 2.0;
        if (p.time_order == 4) lim /= 1.0 / (2.0 - std::cbrt(2.0)) * std::cbrt(2.0);
        return lim;
    }

    Trajectory run()
    {
        Trajectory tr;
        tr.params = p_;
        tr.dr = h_;
        tr.domain_radius = p_.domain_radius;
        double t = 0.0;
        const double dt_max = p_.cfl * h_;
        tr.dt_initial = step_size(dt_max);
        setup_accumulator(tr);
        accel(acc_);
        push_snapshot(tr, t);
        double next_snap = p_.snapshot_interval > 0 ? p_.snapshot_interval : inf;
        std::vector<double> f_old = char_rates(t);
        double n_old = source_norm(t);
        while (t < t_end_) {
            if (tr.steps >= p_.max_steps) throw ComputationError("nonlinear_evolution", "step budget exhausted");
            double dt = step_size(dt_max);
            bool snap = false;
            const double target = std::min(next_snap, t_end_);
            if (t + dt >= target * (1 - 1e-14)) {
                dt = target - t;
                snap = true;
            }
            if (!(dt > 0)) break;
            tr.cfl_ratio_max = std::max(tr.cfl_ratio_max, dt / h_);
            step(dt);
            t = snap ? target : t + dt;
            ++tr.steps;
            const double amp = max_abs_u();
            if (!std::isfinite(amp)) throw ComputationError("nonlinear_evolution", "NaN detected at t = " + std::to_string(t));
            tr.amplitude.emplace_back(t, amp);
            if (tr.acc.enabled) {
                std::vector<double> f_new = char_rates(t);
                for (std::size_t j = 0; j < f_new.size(); ++j) tr.acc.integral[j] += 0.5 * dt * (f_old[j] + f_new[j]);
                f_old = std::move(f_new);
                const double n_new = source_norm(t);
                tr.acc.source_l1l2 += 0.5 * dt * (n_old + n_new);
                n_old = n_new;
            }
            if (amp > p_.blowup_ceiling) {
                tr.blew_up = true;
                tr.blowup_time = fit_blowup(tr.amplitude);
                push_snapshot(tr, t);
                break;
            }
            if (snap) {
                push_snapshot(tr, t);
                if (next_snap <= t * (1 + 1e-14)) next_snap += p_.snapshot_interval;
            }
        }
        if (tr.acc.enabled) finish_accumulator(tr, t, f_old);
        return tr;
    }

private:
    static double sample(const RadialProfile& f, double r)
    {
        const auto& g = f.grid();
        if (r > g.r_max()) {
            if (f.tail_exponent()) return f(r);
            if (f.values().back() == 0.0) return 0.0;
            throw ValidationError("nonlinear_evolution", "initial data end inside the domain without tail or compact support");
        }
        return f.extended(r);
    }

    double step_size(double dt_max) const
    {
        if (p_.amplitude_step <= 0) return dt_max;
        const double a = max_abs_u();
        return a > 0 ? std::min(dt_max, p_.amplitude_step / (a * a)) : dt_max;
    }

    void accel(std::vector<Real>& a) const
    {
        a.assign(n_ + 1, Real(0));
        const Real ih2 = Real(1) / (Real(h_) * Real(h_));
        for (std::size_t i = 1; i < n_; ++i) {
            if (p_.spatial_order == 4 && i + 2 <= n_) {
                const Real m2 = i >= 2 ? psi_[i - 2] : -psi_[2 - i];
                a[i] = (Real(-1) * psi_[i + 2] + Real(16) * psi_[i + 1] - Real(30) * psi_[i] + Real(16) * psi_[i - 1] - m2) *
                       ih2 / Real(12);
            } else
                a[i] = (psi_[i + 1] - Real(2) * psi_[i] + psi_[i - 1]) * ih2;
            if (p_.nonlinear) a[i] += pow5_over_r4(psi_[i], r_[i]);
        }
    }

    void step(double dt)
    {
        if (p_.time_order == 2) {
            verlet(dt);
            return;
        }
        const double w1 = 1.0 / (2.0 - std::cbrt(2.0)), w0 = 1.0 - 2.0 * w1;
        verlet(w1 * dt);
        verlet(w0 * dt);
        verlet(w1 * dt);
    }

    void verlet(double dt)
    {
        const Real hd = Real(0.5) * Real(dt);
        for (std::size_t i = 1; i < n_; ++i) pi_[i] += hd * acc_[i];
        for (std::size_t i = 1; i < n_; ++i) psi_[i] += Real(dt) * pi_[i];
        accel(acc_);
        for (std::size_t i = 1; i < n_; ++i) pi_[i] += hd * acc_[i];
    }

    double origin_value() const
    {
        if (n_ < 2) return 0.0;
        return static_cast<double>((Real(8) * psi_[1] - psi_[2]) / (Real(6) * Real(h_)));
    }

    double max_abs_u() const
    {
        double m = std::abs(origin_value());
        for (std::size_t i = 1; i <= n_; ++i) m = std::max(m, static_cast<double>(rabs(psi_[i] / r_[i])));
        return m;
    }

    void push_snapshot(Trajectory& tr, double t) const
    {
        std::vector<double> u(n_), v(n_);
        for (std::size_t i = 1; i <= n_; ++i) {
            u[i - 1] = static_cast<double>(psi_[i] / r_[i]);
            v[i - 1] = static_cast<double>(pi_[i] / r_[i]);
        }
        Snapshot s;
        s.time = t;
        s.state = StatePair(RadialProfile(grid_, std::move(u)), RadialProfile(grid_, std::move(v)));
        s.origin_value = origin_value();
        if (!tr.snapshots.empty() && tr.snapshots.back().time >= t) return;
        tr.snapshots.push_back(std::move(s));
    }

    double psi_at(double r) const
    {
        const double x = r / h_;
        std::size_t i = static_cast<std::size_t>(std::floor(x));
        if (i >= n_) return static_cast<double>(psi_[n_]);
        const double w = x - static_cast<double>(i);
        return static_cast<double>(psi_[i]) * (1 - w) + static_cast<double>(psi_[i + 1]) * w;
    }

    void setup_accumulator(Trajectory& tr)
    {
        tr.acc.enabled = p_.accumulate_characteristics;
        if (!tr.acc.enabled) return;
        const double s_max = p_.domain_radius - t_end_ - h_;
        if (!(s_max > 0)) throw ValidationError("nonlinear_evolution", "domain too small for the characteristic accumulator");
        const auto J = static_cast<std::size_t>(std::floor(s_max / h_));
        for (std::size_t j = 0; j <= J; ++j) tr.acc.labels.push_back(h_ * static_cast<double>(j));
        tr.acc.integral.assign(tr.acc.labels.size(), 0.0);
        labels_ = tr.acc.labels;
    }

    std::vector<double> char_rates(double t) const
    {
        std::vector<double> f(labels_.size(), 0.0);
        if (!p_.nonlinear) return f;
        for (std::size_t j = 0; j < labels_.size(); ++j) {
            const double r = labels_[j] + t;
            if (r <= 0) continue;
            const double ps = psi_at(r);
            const double q = ps / r;
            f[j] = 0.5 * q * q * q * q * ps;
        }
        return f;
    }

    /// (int_t^{t+s_max} 4 pi r^2 F(u)^2 dr)^{1/2} by the trapezoid rule on nodes.
    double source_norm(double t) const
    {
        if (!p_.nonlinear || labels_.empty()) return 0.0;
        const double hi = t + labels_.back();
        double s = 0.0, prev = -1.0, prev_r = 0.0;
        for (std::size_t i = 1; i <= n_; ++i) {
            const double r = h_ * static_cast<double>(i);
            if (r < t) continue;
            if (r > hi) break;
            const double u = static_cast<double>(psi_[i] / r_[i]);
            const double u2 = u * u;
            const double d = four_pi * r * r * u2 * u2 * u2 * u2 * u2;
            if (prev >= 0) s += 0.5 * (r - prev_r) * (prev + d);
            prev = d;
            prev_r = r;
        }
        return std::sqrt(s);
    }

    void finish_accumulator(Trajectory& tr, double t, const std::vector<double>& rate) const
    {
        tr.acc.final_rate = rate;
        double rmax = 0, amax = 0;
        for (double v : rate) rmax = std::max(rmax, std::abs(v));
        for (double v : tr.acc.integral) amax = std::max(amax, std::abs(v));
        // Outgoing rates decay like t^{-4}; remaining mass ~ rate * t / 3.
        tr.acc.tail_estimate = rmax * t / 3.0;
        tr.acc.converged = tr.acc.tail_estimate <= p_.accumulator_tolerance * amax || rmax == 0.0;
    }

    void project_to_equilibrium(const StatePair& init)
    {
        for (std::size_t i = 1; i <= n_; ++i)
            if (std::abs(sample(init.u1, h_ * static_cast<double>(i))) > 0)
                throw ValidationError("nonlinear_evolution", "equilibrium start requires u1 = 0");
        const Real ih2 = Real(1) / (Real(h_) * Real(h_));
        const std::size_t m = n_ - 1;
        Real last = Real(1);
        for (int it = 0; it < 60; ++it) {
            std::vector<Real> lo(m), di(m), up(m), rhs(m);
            Real scale = Real(0);
            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t i = k + 1;
                const Real q = psi_[i] / r_[i];
                const Real q4 = q * q * q * q;
                rhs[k] = -((psi_[i + 1] - Real(2) * psi_[i] + psi_[i - 1]) * ih2 + (p_.nonlinear ? q4 * psi_[i] : Real(0)));
                di[k] = Real(-2) * ih2 + (p_.nonlinear ? Real(5) * q4 : Real(0));
                lo[k] = ih2;
                up[k] = ih2;
                scale = std::max(scale, rabs(psi_[i]));
            }
            thomas(lo, di, up, rhs);
            Real dmax = Real(0);
            for (std::size_t k = 0; k < m; ++k) {
                psi_[k + 1] += rhs[k];
                dmax = std::max(dmax, rabs(rhs[k]));
            }
            const double rel = static_cast<double>(dmax / scale);
            if (rel < 1e-31 || (it > 3 && !(dmax < last))) break;
            last = dmax;
        }
        for (std::size_t i = 0; i <= n_; ++i) pi_[i] = Real(0);
    }

    static std::optional<double> fit_blowup(const std::vector<std::pair<double, double>>& amp)
    {
        if (amp.empty()) return std::nullopt;
        const double top = amp.back().second;
        std::vector<double> x, y;
        for (const auto& [t, a] : amp)
            if (a >= top / 10 && a > 0) {
                x.push_back(t);
                y.push_back(1.0 / (a * a));
            }
        if (x.size() < 3) return std::nullopt;
        const LineFit f = fit_line(x, y);
        if (!(f.slope < 0)) return std::nullopt;
        return -f.intercept / f.slope;
    }

    EvolutionParams p_;
    double t_end_;
    std::size_t n_ = 0;
    double h_ = 0.0;
    GridPtr grid_;
    std::vector<Real> psi_, pi_, r_, acc_;
    std::vector<double> labels_;
};

} // namespace evolution_detail

/// Radial solution of u_tt - Delta u = |u|^4 u via psi = r u, velocity Verlet, Dirichlet psi(0) = 0.
inline Trajectory evolve(const StatePair& init, double t_end, const EvolutionParams& p)
{
    if (p.precision == Precision::binary128) {
#if defined(__SIZEOF_FLOAT128__)
        return evolution_detail::Evolver<__float128>(init, t_end, p).run();
#else
        throw ValidationError("nonlinear_evolution", "binary128 unavailable on this compiler");
#endif
    }
    return evolution_detail::Evolver<double>(init, t_end, p).run();
}

inline std::vector<std::pair<double, double>> energy_drift(const Trajectory& tr)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& s : tr.snapshots) out.emplace_back(s.time, energy(s.state));
    return out;
}

inline double type_one_reference(double t, double T_plus)
{
    if (!(t < T_plus)) throw ValidationError("nonlinear_evolution", "t must precede the blow-up time");
    return std::pow(0.75, 0.25) / std::sqrt(T_plus - t);
}

/// G_+ = G_{0,+} + accumulated characteristic integrals on the label grid [0, s_max].
inline RadiationProfile nonlinear_radiation_profile(const Trajectory& tr, const RadiationProfile& g0_plus)
{
    if (!tr.acc.enabled) throw ValidationError("nonlinear_evolution", "trajectory has no characteristic accumulator");
    if (!tr.acc.converged)
        throw ComputationError("nonlinear_evolution", "characteristic integrals not converged (tail estimate " +
                                                          std::to_string(tr.acc.tail_estimate) + ")");
    std::vector<double> s = tr.acc.labels, g(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) g[j] = g0_plus(s[j]) + tr.acc.integral[j];
    return RadiationProfile(std::move(s), std::move(g));
}

/// A comparison wave with its first derivatives.
struct WaveField {
    Field u;
    Field u_r;
    Field u_t;

    static WaveField zero()
    {
        Field z = [](double, double) { return 0.0; };
        return {z, z, z};
    }
    static WaveField from_profile(const RadiationProfile& g)
    {
        FreeWave w(g);
        return {[w](double r, double t) { return w.value(r, t); }, [w](double r, double t) { return w.dr(r, t); },
                [w](double r, double t) { return w.dt(r, t); }};
    }
};

/// int_{|x| > R + |t|} |grad_{t,x}(u - v)|^2 at the requested times.
inline std::vector<double> equivalence_defect(const Trajectory& tr, const WaveField& v, double R,
                                              const std::vector<double>& times)
{
    if (tr.snapshots.empty()) throw ValidationError("nonlinear_evolution", "empty trajectory");
    std::vector<double> out;
    for (double t : times) {
        if (t < tr.snapshots.front().time || t > tr.snapshots.back().time)
            throw ValidationError("nonlinear_evolution", "time beyond trajectory range");
        std::size_t k = 0;
        while (k + 1 < tr.snapshots.size() && tr.snapshots[k + 1].time < t) ++k;
        const Snapshot& a = tr.snapshots[k];
        const Snapshot& b = tr.snapshots[std::min(k + 1, tr.snapshots.size() - 1)];
        const double w = b.time > a.time ? (t - a.time) / (b.time - a.time) : 0.0;
        const auto& g = a.state.grid();
        const auto& x = g.nodes();
        const auto da = a.state.gradient().values(), db = b.state.gradient().values();
        std::vector<double> dens(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double ur = (1 - w) * da[i] + w * db[i];
            const double ut = (1 - w) * a.state.u1.value(i) + w * b.state.u1.value(i);
            const double dr = ur - v.u_r(x[i], t), dt = ut - v.u_t(x[i], t);
            dens[i] = four_pi * x[i] * x[i] * (dr * dr + dt * dt);
        }
        const double lo = std::max(R + std::abs(t), g.r_min());
        out.push_back(detail::integrate_nodal(g, dens, lo, g.r_max()));
    }
    return out;
}

} // namespace radwave
