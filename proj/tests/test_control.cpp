#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "bcw/connecting.hpp"
#include "bcw/control.hpp"
#include "bcw/reconstruct.hpp"

using namespace bcw;

namespace {

struct Setup {
    SpatialGrid sg{201};
    TimeGrid tg = TimeGrid::covering(2.5, 1.0 / 210.0);
    PotentialGrid q = PotentialGrid::sample(sg, [](double x) { return 5.0 * reference_bump(x); });
    DtnMatrix L = assemble_dtn(q, sg, tg);
    SourceSignal f = make_bump_source(tg, 0.05, 0.45);
    double T = 1.2;
};

const Setup& setup() {
    static const Setup s;
    return s;
}

// int_0^s u^f(T, x)^2 dx from the interior field, trapezoid with linear interpolation at x = s.
double field_oracle(const Setup& st, double s) {
    const WaveField u = solve_forward(st.q, SpeedProfile::constant(st.sg), st.f, st.sg, st.tg);
    const int k = st.tg.index_of(st.T);
    const double dx = st.sg.dx();
    double acc = 0.0;
    int i = 0;
    for (; st.sg.x(i + 1) <= s + 1e-12; ++i) acc += 0.5 * dx * (u.u(k, i) * u.u(k, i) + u.u(k, i + 1) * u.u(k, i + 1));
    const double frac = (s - st.sg.x(i)) / dx;
    if (frac > 1e-12) {
        const double us = (1.0 - frac) * u.u(k, i) + frac * u.u(k, i + 1);
        acc += 0.5 * frac * dx * (u.u(k, i) * u.u(k, i) + us * us);
    }
    return acc;
}

} // namespace

TEST(Control, GramMatrixIsPositiveDefinite) {
    const auto& st = setup();
    for (double s : {0.3, 0.6}) {
        const GramSystem g = gram_system(st.f, st.T, st.L, ControlBasis::uniform(st.tg, st.T, s, 32));
        EXPECT_LT(g.asymmetry, 1e-10);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.K);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "s=" << s;
    }
}

TEST(Control, ResidualIsNonNegativeAndBoundedByTarget) {
    const auto& st = setup();
    const GramSystem g = gram_system(st.f, st.T, st.L, ControlBasis::uniform(st.tg, st.T, 0.5, 32));
    for (double a : {1e-10, 1e-8, 1e-6}) {
        const ControlSolution sol = solve_control(g, a);
        EXPECT_FALSE(sol.regularization_failure);
        EXPECT_GE(sol.residual, -1e-12 * sol.target_energy);
        EXPECT_LE(sol.residual, sol.target_energy * (1.0 + 1e-12));
    }
}

TEST(Control, TruncatedEnergyGrowsWithWindow) {
    const auto& st = setup();
    double prev = 0.0;
    for (double s : {0.2, 0.35, 0.5, 0.65, 0.8}) {
        const double e = truncated_inner_product(st.f, st.f, s, st.T, st.L,
                                                 ControlBasis::uniform(st.tg, st.T, s, 48), 1e-10);
        EXPECT_GE(e, prev - 1e-6) << "s=" << s;
        EXPECT_NEAR(e, field_oracle(st, s), 0.03 * field_oracle(st, 0.8)) << "s=" << s;
        prev = e;
    }
}

TEST(Control, RefiningTheBasisDoesNotHurt) {
    const auto& st = setup();
    double prev = std::numeric_limits<double>::infinity();
    for (int M : {8, 16, 32, 64}) {
        const GramSystem g = gram_system(st.f, st.T, st.L, ControlBasis::uniform(st.tg, st.T, 0.5, M));
        const double r = solve_control(g, 1e-12 * g.K.trace() / M).residual;
        EXPECT_LE(r, prev * (1.0 + 1e-3) + 1e-9) << "M=" << M;
        prev = r;
    }
}

TEST(Control, NestedProjectorMatchesDirectSolve) {
    // Spline windows end a fixed fraction of a knot short of n delta; the profile is compared there.
    const auto& st = setup();
    const double delta = 0.02;
    const NestedProjector P(st.L, st.T, delta, 30, 1e-12);
    const Eigen::VectorXd y = P.coordinates(st.f);
    const auto prof = P.truncated_profile(y, y);
    const double shift = spline_window_deficit();
    for (int n : {10, 20, 30})
        EXPECT_NEAR(prof[n], field_oracle(st, (n - shift) * delta), 0.03 * field_oracle(st, 0.6)) << "n=" << n;
}

TEST(Control, ReachableTargetIsMatchedExactly) {
    const auto& st = setup();
    const ControlBasis basis = ControlBasis::uniform(st.tg, st.T, 0.5, 16);
    const GramSystem g = gram_system(basis.elements[5], st.T, st.L, basis);
    const ControlSolution sol = solve_control(g, 0.0);
    EXPECT_LT(std::abs(sol.residual), 1e-8 * sol.target_energy);
}

TEST(Control, ZeroTargetNeedsNoControl) {
    const auto& st = setup();
    const GramSystem g = gram_system(zero_source(st.tg), st.T, st.L, ControlBasis::uniform(st.tg, st.T, 0.5, 16));
    const ControlSolution sol = solve_control(g, 1e-8);
    EXPECT_EQ(sol.coefficients.norm(), 0.0);
    EXPECT_EQ(sol.residual, 0.0);
}

TEST(Control, FullWindowRecoversTheKernel) {
    // With s = 1 the window covers the whole interval, so the truncated product is W_{f,h}(T, T).
    const auto& st = setup();
    const SourceSignal h = make_source(st.tg, {{Pulse::Shape::Bump, 0.2, 0.7, 0.8}});
    const double full = truncated_inner_product(st.f, h, 1.0, st.T, st.L, ControlBasis::uniform(st.tg, st.T, 1.0, 64),
                                                1e-12);
    const auto W = diagonal(blagoveshchenskii(st.f, h, st.L));
    const double ref = W[st.tg.index_of(st.T)];
    EXPECT_NEAR(full, ref, 0.01 * std::abs(ref));
}
