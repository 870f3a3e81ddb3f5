#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include <radwave/core_fields.hpp>
#include <radwave/ground_state.hpp>
#include <radwave/linear_radiation.hpp>

using namespace radwave;

namespace {

constexpr double pi = std::numbers::pi;

/// ||grad W||^2 = 4 pi int r^4 (1/3 + r^2)^-3 dr; the Beta integral gives 3 sqrt3 pi^2 / 4.
constexpr double grad_W_sq_frozen = 12.820992204969128;

double grad_W_sq_oracle()
{
    auto f = [](double r) {
        const double q = 1.0 / (1.0 / 3 + r * r);
        return r * r * q * r * r * q * q;
    };
    return 4 * pi * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-15);
}

/// Independent nested Gauss-Kronrod evaluation of ||W||_{Y} on the channel (0,1), |t| < T.
double y_norm_W_channel_oracle(double T)
{
    using boost::math::quadrature::gauss_kronrod;
    auto slice = [](double t) {
        auto d = [](double r) { return std::pow(1.0 / 3 + r * r, -5) * 4 * pi * r * r; };
        const double I = gauss_kronrod<double, 61>::integrate(d, std::abs(t), std::abs(t) + 1, 8, 1e-14);
        return std::sqrt(I);
    };
    double s = 0.0;
    double a = 0.0;
    for (double b : {0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 300.0, T}) {
        s += gauss_kronrod<double, 61>::integrate(slice, a, b, 10, 1e-13);
        a = b;
    }
    return std::pow(2 * s, 0.2);
}

Field W_field() { return [](double r, double) { return eval_W(r); }; }

} // namespace

TEST(MakeGrid, LogarithmicDecades)
{
    auto g = make_grid(1e-6, 1e6, 13, GridScheme::logarithmic);
    ASSERT_EQ(g->size(), 13u);
    for (std::size_t i = 0; i < 13; ++i) EXPECT_NEAR((*g)[i] / std::pow(10.0, static_cast<double>(i) - 6), 1.0, 1e-12);
    for (std::size_t i = 2; i < 13; ++i) EXPECT_NEAR(((*g)[i] / (*g)[i - 1]) / ((*g)[1] / (*g)[0]), 1.0, 1e-12);
}

TEST(MakeGrid, UniformTwoNodes)
{
    auto g = make_grid(1, 2, 2, GridScheme::uniform);
    EXPECT_EQ(g->nodes(), (std::vector<double>{1.0, 2.0}));
    EXPECT_EQ(g->r_min(), 1.0);
    EXPECT_EQ(g->r_max(), 2.0);
}

TEST(MakeGrid, Errors)
{
    EXPECT_THROW(make_grid(0, 1, 10, GridScheme::uniform), ValidationError);
    EXPECT_THROW(make_grid(1, 2, 1, GridScheme::uniform), ValidationError);
    EXPECT_THROW(RadialGrid({1.0, 1.0, 2.0}, GridScheme::uniform), ValidationError);
}

TEST(RadialProfile, Invariants)
{
    auto g = make_grid(1, 2, 3, GridScheme::uniform);
    EXPECT_THROW(RadialProfile(g, {1.0, 2.0}), ValidationError);
    EXPECT_THROW(RadialProfile(g, {1.0, 2.0, 3.0}, 0.5), ValidationError);
    RadialProfile p(g, {1.0, 1.0, 1.0}, 1.0);
    EXPECT_NEAR(p(4.0), 0.5, 1e-15);
    RadialProfile q(g, {1.0, 1.0, 1.0});
    EXPECT_THROW(q(3.0), ValidationError);
}

TEST(HNorm, ZeroState)
{
    auto g = make_log_grid(1e-3, 10, 20);
    for (double R : {0.0, 0.5, 5.0}) EXPECT_EQ(h_norm(zero_state(g), R), 0.0);
}

TEST(HNorm, GroundStateOracle)
{
    ASSERT_NEAR(grad_W_sq_oracle(), grad_W_sq_frozen, 1e-12);
    // Substituting r = x / sqrt(3): sqrt(3) B(5/2, 1/2) / 2.
    ASSERT_NEAR(4 * pi * std::sqrt(3.0) * boost::math::beta(2.5, 0.5) / 2, grad_W_sq_frozen, 1e-12);
    auto g = make_log_grid(1e-6, 1e6, 200);
    const double v = h_norm(ground_state_pair(g, Bubble{1, 1.0}), 0.0);
    EXPECT_NEAR(v, std::sqrt(grad_W_sq_frozen), 1e-7);
    EXPECT_NEAR(v, 3.5806, 1e-4);
}

TEST(HNorm, IndicatorProfileIsometry)
{
    // 8 pi (1/2) + 4 pi (1/2) 1^2 = 6 pi.
    const RadiationProfile G = RadiationProfile::indicator(0, 1);
    auto base = make_log_grid(0.5, 4, 4000);
    const StatePair st = data_from_profile(G, base);
    EXPECT_NEAR(h_norm(st, 0.5), std::sqrt(6 * pi), 1e-6);
}

TEST(HNorm, MonotoneInR)
{
    auto g = make_log_grid(1e-4, 1e4, 100);
    const StatePair st = bubbles_state(g, BubbleList({{1, 10.0}, {-1, 0.1}}));
    double prev = inf;
    for (double R : {0.0, 1e-3, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4, 1e5}) {
        const double v = h_norm(st, R);
        EXPECT_LE(v, prev * (1 + 1e-12));
        prev = v;
    }
}

TEST(HNorm, NoTailBeyondRmax)
{
    auto g = make_grid(1, 2, 10, GridScheme::uniform);
    EXPECT_THROW(h_norm(zero_state(g), 3.0), ValidationError);
}

TEST(SpaceTimeNorms, ZeroField)
{
    Field z = [](double, double) { return 0.0; };
    EXPECT_EQ(y_norm(z, ChannelRegion::channel(0, 1)).value, 0.0);
    EXPECT_EQ(l1l2_norm(z, ChannelRegion::exterior(0)).value, 0.0);
}

TEST(SpaceTimeNorms, WChannelMatchesOracle)
{
    /// Nested Gauss-Kronrod value of the oracle above, frozen.
    constexpr double frozen = 1.4861517906962469;
    const double oracle = y_norm_W_channel_oracle(1e3);
    ASSERT_NEAR(oracle, frozen, 1e-9);
    SpaceTimeOptions o;
    o.T = 1e3;
    const NormValue v = y_norm(W_field(), ChannelRegion::channel(0, 1), o);
    EXPECT_NEAR(v.value / frozen, 1.0, 1e-3);
    EXPECT_EQ(v.t_window, 1e3);
    EXPECT_GE(v.abs_error_estimate, 0.0);
}

TEST(SpaceTimeNorms, TipRemovedChannelScaling)
{
    // Removing r + |t| < S from the channel: doubling S scales the norm by 2^{-3/5}.
    const double R = 1e3;
    SpaceTimeOptions o = SpaceTimeOptions::for_scales(1, 2 * R);
    o.time_decay_exponent = 4;
    const double a = y_norm(W_field(), ChannelRegion::beyond(0, 1, R), o).value;
    const double b = y_norm(W_field(), ChannelRegion::beyond(0, 1, 2 * R), o).value;
    EXPECT_NEAR(b / a / std::pow(2.0, -0.6), 1.0, 0.05);
}

TEST(SpaceTimeNorms, GlobalInteractionHalving)
{
    auto f = [](double l) {
        Field g = [l](double r, double) { return std::pow(eval_W(r), 4) * eval_W(r, Bubble{1, l}); };
        SpaceTimeOptions o = SpaceTimeOptions::for_scales(1, l);
        o.time_decay_exponent = 3.5;
        return l1l2_norm(g, ChannelRegion::exterior(0), o).value;
    };
    EXPECT_NEAR(f(400) / f(100), 0.5, 0.05);
}

TEST(SpaceTimeNorms, FlatDifferenceLogCorrectedSlope)
{
    std::vector<double> x, y;
    for (double l : {1e2, 1e3, 1e4}) {
        Field g = [l](double r, double) { return std::pow(eval_W(r), 4) * (eval_W(r, Bubble{1, l}) - std::sqrt(3.0 / l)); };
        SpaceTimeOptions o = SpaceTimeOptions::for_scales(1, l);
        o.time_decay_exponent = 3;
        const double v = l1l2_norm(g, ChannelRegion::channel(0, 1), o).value;
        x.push_back(std::log(l));
        y.push_back(std::log(v / std::log(l)));
    }
    EXPECT_NEAR(fit_line(x, y).slope, -2.5, 0.05);
}

TEST(SpaceTimeNorms, AbsoluteHomogeneity)
{
    const Field f = [](double r, double t) { return eval_W(r) / (1 + t * t); };
    for (double alpha : {-3.0, 0.25, 7.0}) {
        const Field g = [&](double r, double t) { return alpha * f(r, t); };
        for (auto reg : {ChannelRegion::channel(0, 1), ChannelRegion::exterior(0.5)}) {
            EXPECT_NEAR(y_norm(g, reg).value / y_norm(f, reg).value, std::abs(alpha), 1e-12 * std::abs(alpha));
            EXPECT_NEAR(l1l2_norm(g, reg).value / l1l2_norm(f, reg).value, std::abs(alpha), 1e-12 * std::abs(alpha));
        }
    }
}

TEST(SpaceTimeNorms, RegionMonotonicity)
{
    const Field f = [](double r, double t) { return eval_W(r) / (1 + t * t); };
    const double a = y_norm(f, ChannelRegion::channel(0.5, 1)).value;
    const double b = y_norm(f, ChannelRegion::channel(0, 1)).value;
    const double c = y_norm(f, ChannelRegion::channel(0, 4)).value;
    const double d = y_norm(f, ChannelRegion::exterior(0)).value;
    const double e = y_norm(f, ChannelRegion::truncated(0, 1, 3)).value;
    EXPECT_LE(a, b);
    EXPECT_LE(e, b);
    EXPECT_LE(b, c);
    EXPECT_LE(c, d * (1 + 1e-9));
}

TEST(SpaceTimeNorms, RefinementWithinErrorEstimate)
{
    const Field f = [](double r, double) { return eval_W(r); };
    SpaceTimeOptions o = SpaceTimeOptions::for_scales(1, 10);
    o.time_decay_exponent = 4;
    const NormValue base = y_norm(f, ChannelRegion::channel(0, 1), o);
    SpaceTimeOptions fine = o;
    fine.time_panels_per_decade *= 2;
    fine.space_panels_per_decade *= 2;
    fine.channel_panels *= 2;
    const NormValue ref = y_norm(f, ChannelRegion::channel(0, 1), fine);
    EXPECT_LE(std::abs(ref.value - base.value), base.abs_error_estimate);
}

TEST(SpaceTimeNorms, Validation)
{
    EXPECT_THROW(ChannelRegion::channel(1, 1), ValidationError);
    EXPECT_THROW(ChannelRegion::truncated(0, 2, 1), ValidationError);
    SpaceTimeOptions o;
    o.T = 0;
    EXPECT_THROW(y_norm(W_field(), ChannelRegion::channel(0, 1), o), ValidationError);
}

TEST(SpaceTimeNorms, SingularityDetected)
{
    // |f|^10 r^2 ~ r^-4 makes each slice ~ t^-3, so the time integrand ~ t^-3/2 is not integrable at t = 0.
    const Field f = [](double r, double) { return std::pow(r, -0.6); };
    EXPECT_THROW(y_norm(f, ChannelRegion::channel(0, 1)), ComputationError);
}
