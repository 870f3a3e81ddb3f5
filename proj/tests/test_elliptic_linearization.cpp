#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include <radwave/elliptic_linearization.hpp>

using namespace radwave;

namespace {

/// Fixed-step RKF78 (40000 steps in ln r) from -5/(2r) at r = 1e6 down to 1e-8, then w - r w'.
constexpr double mu0_frozen = 0.5773502691896;

double mu0_oracle(int steps)
{
    using S = std::array<double, 2>;
    boost::numeric::odeint::runge_kutta_fehlberg78<S> st;
    const double x0 = std::log(1e6), x1 = std::log(1e-8), h = (x1 - x0) / steps;
    S y{-2.5e-6, 2.5e-6};
    auto f = [](const S& v, S& dv, double x) {
        const double r = std::exp(x), q = 1.0 / 3 + r * r;
        dv[0] = v[1];
        dv[1] = v[1] - r * r * 5 / (q * q) * (v[0] + r);
    };
    double x = x0;
    for (int i = 0; i < steps; ++i) {
        st.do_step(f, y, x, h);
        x += h;
    }
    return y[0] - y[1];
}

const WStar& shared_wstar()
{
    static const WStar ws = solve_w_star();
    return ws;
}

} // namespace

TEST(WStar, Mu0MatchesOracle)
{
    ASSERT_NEAR(mu0_oracle(40000), mu0_frozen, 1e-12);
    ASSERT_NEAR(mu0_oracle(20000), mu0_frozen, 1e-12);
    EXPECT_NEAR(shared_wstar().mu0, mu0_frozen, 1e-10);
    EXPECT_GT(std::abs(shared_wstar().mu0), 10 * 1e-13);
}

TEST(WStar, Mu0StableUnderRefinementAndIntegrator)
{
    WStarOptions o;
    o.r_infinity = 2e4;
    o.tol = 5e-14;
    const double a = solve_w_star(o).mu0;
    WStarOptions c;
    c.integrator = EllipticIntegrator::gauss_collocation;
    const double b = solve_w_star(c).mu0;
    const double ref = shared_wstar().mu0;
    EXPECT_NEAR(a / ref, 1.0, 1e-6);
    EXPECT_NEAR(b / ref, 1.0, 1e-6);
}

TEST(WStar, AsymptoticTail)
{
    const double w100 = shared_wstar()(100.0);
    EXPECT_NEAR(w100, -0.025, 5e-4);
    EXPECT_GT(std::abs(w100 + 0.025), 1e-7);
    for (double r : {1e3, 1e4, 1e5}) EXPECT_NEAR(r * shared_wstar()(r), -2.5, 5.0 / r);
}

TEST(WStar, OdeResidual)
{
    EXPECT_LE(ode_residual(shared_wstar()), 1e-9);
    WStarOptions c;
    c.integrator = EllipticIntegrator::gauss_collocation;
    EXPECT_LE(ode_residual(solve_w_star(c)), 1e-9);
}

TEST(WStar, Validation)
{
    WStarOptions o;
    o.r_infinity = 100;
    EXPECT_THROW(solve_w_star(o), ValidationError);
    WStarOptions t;
    t.tol = 1e-15;
    EXPECT_THROW(solve_w_star(t), ValidationError);
}

TEST(HomogeneousV, Values)
{
    EXPECT_NEAR(homogeneous_v(1 / std::sqrt(3.0)), 0.0, 1e-15);
    EXPECT_NEAR(homogeneous_v(1e6), 1.0, 1e-5);
    EXPECT_EQ(homogeneous_v(0.0), 0.0);
}

TEST(HomogeneousV, SolvesHomogeneousEquation)
{
    // Symbolic second derivative of v = r (r^2 - 1/3) q^{-3/2}, q = 1/3 + r^2.
    auto v_rr = [](double r) {
        const double q = 1.0 / 3 + r * r;
        const double a = r * r * r - r / 3, ap = 3 * r * r - 1.0 / 3, app = 6 * r;
        const double b = std::pow(q, -1.5), bp = -3 * r * std::pow(q, -2.5), bpp = -3 * std::pow(q, -2.5) + 15 * r * r * std::pow(q, -3.5);
        return app * b + 2 * ap * bp + a * bpp;
    };
    for (int k = 0; k < 100; ++k) {
        const double r = std::pow(10.0, -3 + 6.0 * k / 99);
        const double q = 1.0 / 3 + r * r;
        const double res = -v_rr(r) - 5 / (q * q) * homogeneous_v(r);
        EXPECT_NEAR(res, 0.0, 1e-10 * std::max(1.0, std::abs(v_rr(r)))) << "r " << r;
        const double h = 1e-5 * std::max(r, 1e-3);
        EXPECT_NEAR(homogeneous_v_r(r), (homogeneous_v(r + h) - homogeneous_v(r - h)) / (2 * h), 1e-7);
    }
}

TEST(BuildPhi, VanishesAtMatchingRadius)
{
    for (double c : {100.0, 1e3, 1e4}) {
        const EllipticSolution s = build_phi(c, shared_wstar());
        EXPECT_NEAR(s.phi(c), 0.0, 1e-10);
        EXPECT_EQ(s.mu0, shared_wstar().mu0);
        EXPECT_NEAR(s.beta, -shared_wstar()(c) / homogeneous_v(c), 1e-15);
    }
    EXPECT_THROW(build_phi(0.5, shared_wstar()), ValidationError);
}

TEST(BuildPhi, BetaScalesInverselyWithC)
{
    std::vector<double> bc;
    for (double c : {100.0, 1e3, 1e4}) bc.push_back(std::abs(build_phi(c, shared_wstar()).beta) * c);
    const auto [lo, hi] = std::minmax_element(bc.begin(), bc.end());
    EXPECT_LE(*hi / *lo, 2.0);
    std::vector<double> cs;
    for (double c = 2; c < 2e4; c *= 1.5) cs.push_back(c);
    const double c5 = report_c5(shared_wstar(), cs);
    EXPECT_LE(c5, 100.0);
}

TEST(BuildPhi, NearOriginBand)
{
    for (double c : {100.0, 1e4}) {
        const EllipticSolution s = build_phi(c, shared_wstar());
        const double r4 = report_r4(s);
        EXPECT_GT(r4, 0.0);
        for (double r = 1e-8; r <= r4; r *= 1.2) {
            const double q = r * s.phi(r) / s.mu0;
            EXPECT_GE(q, 0.5);
            EXPECT_LE(q, 1.5);
        }
    }
}

TEST(BuildPhi, SolvesLinearizedEquation)
{
    // -(r phi)'' = 5 W^4 (r phi) + 5 W^4 r, checked by central differences of w = r phi.
    const EllipticSolution s = build_phi(100, shared_wstar());
    for (double r : {0.05, 0.3, 1.0, 7.0, 60.0, 150.0}) {
        const double h = 1e-3 * r;
        const double wrr = (s.w(r + h) - 2 * s.w(r) + s.w(r - h)) / (h * h);
        const double W4 = std::pow(eval_W(r), 4);
        EXPECT_NEAR(-wrr, 5 * W4 * (s.w(r) + r), 1e-5 * (1 + 5 * W4 * r)) << "r " << r;
    }
}

TEST(BuildPhi, DecayBoundIndependentOfC)
{
    std::vector<double> sup;
    for (double c : {100.0, 1e3, 1e4}) {
        const EllipticSolution s = build_phi(c, shared_wstar());
        double m = 0;
        for (double r = 1e-6; r < 1e6; r *= 1.1) m = std::max(m, std::abs(r * s.phi(r)));
        sup.push_back(m);
    }
    for (double m : sup) EXPECT_LE(m, 2.0);
}

TEST(BuildPhi, ExteriorH1FiniteAndDecreasing)
{
    const EllipticSolution s = build_phi(100, shared_wstar());
    double prev = inf;
    for (double r : {0.01, 0.1, 1.0, 10.0, 100.0, 1e3}) {
        const double v = phi_exterior_h1(s, r);
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(PhiChannel, EmptyChannelAndValidation)
{
    const EllipticSolution s = build_phi(10, shared_wstar());
    EXPECT_EQ(phi_channel_norm(s, 100, 0.5, 0.5).value, 0.0);
    EXPECT_THROW(phi_channel_norm(s, 100, 0, 200), ValidationError);
    EXPECT_THROW(phi_channel_norm(s, 0, 0, 0.5), ValidationError);
}

TEST(PhiChannel, LambdaSlopeMinusOne)
{
    const EllipticSolution s = build_phi(10, shared_wstar());
    std::vector<double> x, y;
    for (double l : {1e2, 1e3, 1e4}) {
        x.push_back(std::log(l));
        y.push_back(std::log(phi_channel_norm(s, l, 0, 1).value));
    }
    EXPECT_NEAR(fit_line(x, y).slope, -1.0, 0.1);
}

TEST(PhiChannel, WidthSlopeOneHalf)
{
    const EllipticSolution s = build_phi(10, shared_wstar());
    std::vector<double> x, y;
    for (double w : {0.25, 1.0, 4.0}) {
        x.push_back(std::log(w));
        y.push_back(std::log(phi_channel_norm(s, 1e3, 0, w).value));
    }
    EXPECT_NEAR(fit_line(x, y).slope, 0.5, 0.05);
}

TEST(PhiChannel, UniformInC)
{
    // lambda ||chi W_lambda^4 phi|| over c in [1e2, 1e4] stays within a fixed band.
    for (double l : {1e3, 1e4}) {
        std::vector<double> v;
        for (double c : {100.0, 1e3, 1e4}) v.push_back(l * phi_channel_norm(build_phi(c, shared_wstar()), l, 0, 1).value);
        for (double q : v) EXPECT_LE(q, 2.0);
    }
}

TEST(WStar, OtherSolutionsDiverge)
{
    // -r + C v with w(0) = 0: |w| grows without bound unless it is the decaying branch.
    for (double C : {-2.0, 0.5, 3.0}) {
        const double a = std::abs(-1e3 + C * homogeneous_v(1e3)), b = std::abs(-1e6 + C * homogeneous_v(1e6));
        EXPECT_GT(b, 100 * a);
    }
    EXPECT_LT(std::abs(shared_wstar()(1e6)), 1e-5);
}
