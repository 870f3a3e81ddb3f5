#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "core_fields.hpp"
#include "ground_state.hpp"

namespace radwave {

enum class CaseTag { complete_a, exterior_b };

inline const char* to_string(CaseTag c) { return c == CaseTag::complete_a ? "complete-a" : "exterior-b"; }

struct DecompositionResult {
    BubbleList bubbles;
    /// Scales from the one-pass inductive identities, before refinement.
    BubbleList one_pass;
    CaseTag case_tag = CaseTag::complete_a;
    std::optional<double> residual_full;
    std::optional<double> residual_exterior;
    std::vector<double> ratios;
    double c2 = 100.0;
    /// max_j |remainder(c2 lambda_j)| / threshold for the one-pass scales.
    double posthoc_zero = 0.0;
    int refinement_sweeps = 0;
};

struct DecompositionOptions {
    double tolerance = 1e-10;
    /// Re-solve each crossing with every other bubble removed until the scales settle.
    bool refine = true;
    int max_sweeps = 100;
    double refine_tolerance = 1e-13;
    /// Largest node ratio accepted when bracketing crossings.
    double max_node_ratio = 1.5;
};

namespace decomposition_detail {

struct Scanner {
    const StatePair& u;
    const StatePair& v;
    double c2;
    double threshold;
    DecompositionOptions opt;

    double remainder(double r, const std::vector<Bubble>& removed) const
    {
        double s = u.u0.extended(r) - v.u0.extended(r);
        for (const auto& b : removed) s -= eval_W(r, b);
        return s;
    }

    double h(double r, const std::vector<Bubble>& removed) const
    {
        return std::sqrt(r) * std::abs(remainder(r, removed)) - threshold;
    }

    /// Largest r < upper with h(r) = 0 approached from below in r (h >= 0 just below, < 0 above).
    std::optional<double> largest_crossing(double upper, const std::vector<Bubble>& removed) const
    {
        const auto& x = u.grid().nodes();
        std::size_t i = x.size();
        while (i > 0 && x[i - 1] >= upper) --i;
        if (i == 0) return std::nullopt;
        double hi_r = std::isfinite(upper) ? upper : x.back();
        double hi_h = h(hi_r, removed);
        if (hi_h >= 0 && !std::isfinite(upper))
            throw ComputationError("bubble_decomposition",
                                   "grid too coarse to bracket a crossing near r = " + std::to_string(hi_r) +
                                       " (threshold exceeded at r_max)");
        for (std::size_t k = i; k-- > 0;) {
            const double r = x[k];
            const double hr = h(r, removed);
            if (hr >= 0 && hi_h < 0) {
                if (hi_r / r > opt.max_node_ratio)
                    throw ComputationError("bubble_decomposition",
                                           "grid too coarse to bracket a crossing near r = " + std::to_string(r));
                return bisect(r, hi_r, removed);
            }
            hi_r = r;
            hi_h = hr;
        }
        return std::nullopt;
    }

    double bisect(double a, double b, const std::vector<Bubble>& removed) const
    {
        // h(a) >= 0 > h(b)
        while ((b - a) > opt.tolerance * a * 1e-2) {
            const double m = 0.5 * (a + b);
            if (m <= a || m >= b) break;
            if (h(m, removed) >= 0)
                a = m;
            else
                b = m;
        }
        return 0.5 * (a + b);
    }
};

} // namespace decomposition_detail

/// Inductive extraction of (zeta_j, lambda_j) from the t = 0 traces of u and v_L.
inline DecompositionResult extract_bubbles(const StatePair& state, const StatePair& vL_state, double c2, std::size_t n_max,
                                           const DecompositionOptions& opt = {})
{
    if (!(c2 >= 10)) throw ValidationError("bubble_decomposition", "c2 must be at least 10");
    if (n_max == 0) throw ValidationError("bubble_decomposition", "n_max must be positive");
    if (!state.grid().same_nodes(vL_state.grid())) throw ValidationError("bubble_decomposition", "mismatched grids");
    decomposition_detail::Scanner sc{state, vL_state, c2, std::sqrt(c2) * eval_W(c2), opt};

    DecompositionResult res;
    res.c2 = c2;
    std::vector<Bubble> found;
    double upper = inf;
    bool exhausted = false;
    while (found.size() < n_max) {
        const auto r = sc.largest_crossing(upper, found);
        if (!r) {
            exhausted = true;
            break;
        }
        const double rem = sc.remainder(*r, found);
        if (rem == 0.0) throw ComputationError("bubble_decomposition", "degenerate input: zero remainder at c2*lambda");
        Bubble b{rem > 0 ? 1 : -1, *r / c2};
        if (!found.empty() && !(b.scale < found.back().scale))
            throw ComputationError("bubble_decomposition", "non-decreasing scale at r = " + std::to_string(*r));
        found.push_back(b);
        res.posthoc_zero = std::max(res.posthoc_zero, std::abs(sc.remainder(*r, found)) * std::sqrt(*r) / sc.threshold);
        upper = b.scale;
    }
    if (!exhausted) exhausted = !sc.largest_crossing(upper, found);
    res.one_pass = BubbleList(found);

    if (opt.refine && found.size() >= 2) {
        for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
            double change = 0.0;
            for (std::size_t j = 0; j < found.size(); ++j) {
                std::vector<Bubble> others;
                for (std::size_t k = 0; k < found.size(); ++k)
                    if (k != j) others.push_back(found[k]);
                const double up = j == 0 ? inf : found[j - 1].scale;
                const auto r = sc.largest_crossing(up, others);
                if (!r) throw ComputationError("bubble_decomposition", "refinement lost crossing " + std::to_string(j + 1));
                const double s = *r / c2;
                change = std::max(change, std::abs(s / found[j].scale - 1));
                found[j].scale = s;
                found[j].sign = sc.remainder(*r, others) > 0 ? 1 : -1;
            }
            res.refinement_sweeps = sweep + 1;
            if (change < opt.refine_tolerance) break;
        }
    }
    res.bubbles = BubbleList(found);
    for (std::size_t j = 1; j < found.size(); ++j) res.ratios.push_back(found[j].scale / found[j - 1].scale);
    res.case_tag = exhausted ? CaseTag::complete_a : CaseTag::exterior_b;
    return res;
}

/// H(0) (case a) or H(c2 lambda_n) (case b) norm of state - sum zeta_j W_{lambda_j} - vL.
inline double resolution_residual(const StatePair& state, DecompositionResult& result, const StatePair& vL_state)
{
    if (!state.grid().same_nodes(vL_state.grid())) throw ValidationError("bubble_decomposition", "mismatched grids");
    const StatePair sum = bubbles_state(state.grid_ptr(), result.bubbles);
    const StatePair rem = combine(1.0, combine(1.0, state, -1.0, vL_state), -1.0, sum);
    if (result.case_tag == CaseTag::complete_a || result.bubbles.empty()) {
        result.residual_full = h_norm(rem, 0.0);
        result.residual_exterior.reset();
        return *result.residual_full;
    }
    result.residual_exterior = h_norm(rem, result.c2 * result.bubbles.items().back().scale);
    result.residual_full.reset();
    return *result.residual_exterior;
}

struct RatioEntry {
    std::size_t j;
    double ratio;
    double normalized;
};

inline std::vector<RatioEntry> ratio_report(const DecompositionResult& result, double delta)
{
    if (result.bubbles.size() < 2) throw ValidationError("bubble_decomposition", "ratio report needs J >= 2");
    if (!(delta > 0)) throw ValidationError("bubble_decomposition", "delta must be positive");
    std::vector<RatioEntry> out;
    for (std::size_t j = 0; j + 1 < result.bubbles.size(); ++j) {
        const double q = result.bubbles[j + 1].scale / result.bubbles[j].scale;
        out.push_back({j + 1, q, q / (delta * delta)});
    }
    return out;
}

} // namespace radwave
