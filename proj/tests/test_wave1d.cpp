#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bcw/errors.hpp"
#include "bcw/wave1d.hpp"

using namespace bcw;

namespace {

SourceSignal random_pulses(const TimeGrid& tg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lo(0.0, 0.6), width(0.1, 0.5), amp(-2.0, 2.0);
    std::vector<Pulse> p;
    for (int i = 0; i < 2; ++i) {
        const double a = lo(rng);
        p.push_back({Pulse::Shape::Bump, a, a + width(rng), amp(rng)});
    }
    return make_source(tg, p);
}

} // namespace

TEST(Wave1d, UnitCourantMatchesTravellingWave) {
    // With q = 0 and dt = dx the leapfrog stencil propagates u = f(t - x) exactly.
    const SpatialGrid sg(201);
    const TimeGrid tg = TimeGrid::covering(0.9, sg.dx());
    const SourceSignal f = make_bump_source(tg, 0.05, 0.35);
    const WaveField u = solve_forward(PotentialGrid::zero(sg), SpeedProfile::constant(sg), f, sg, tg);
    double err = 0.0;
    for (int k = 0; k < tg.size(); ++k)
        for (int i = 0; i < sg.size(); ++i) err = std::max(err, std::abs(u.u(k, i) - f.value(tg.t(k) - sg.x(i))));
    EXPECT_LT(err, 1e-12);
}

TEST(Wave1d, ForwardMapIsLinear) {
    std::mt19937_64 rng(7);
    const SpatialGrid sg(201);
    const TimeGrid tg = TimeGrid::covering(1.5, 1.0 / 210.0);
    const PotentialGrid q = PotentialGrid::sample(sg, [](double x) { return 5.0 * reference_bump(x); });
    const SpeedProfile c = SpeedProfile::constant(sg);
    for (int trial = 0; trial < 5; ++trial) {
        const SourceSignal f = random_pulses(tg, rng), g = random_pulses(tg, rng);
        const double a = std::uniform_real_distribution<double>(-3, 3)(rng);
        const WaveField uf = solve_forward(q, c, f, sg, tg), ug = solve_forward(q, c, g, sg, tg);
        const WaveField us = solve_forward(q, c, combine(a, f, 1.0, g), sg, tg);
        double err = 0.0, peak = 0.0;
        for (int k = 0; k < tg.size(); ++k)
            for (int i = 0; i < sg.size(); ++i) {
                err = std::max(err, std::abs(us.u(k, i) - a * uf.u(k, i) - ug.u(k, i)));
                peak = std::max(peak, std::abs(us.u(k, i)));
            }
        EXPECT_LT(err, 1e-12 * peak);
    }
}

TEST(Wave1d, TraceIsCausal) {
    // A source that is zero before t0 yields zero flux before t0.
    std::mt19937_64 rng(11);
    const SpatialGrid sg(201);
    const TimeGrid tg = TimeGrid::covering(2.0, 1.0 / 210.0);
    const PotentialGrid q = PotentialGrid::sample(sg, [](double x) { return 5.0 * reference_bump(x); });
    for (int trial = 0; trial < 5; ++trial) {
        const SourceSignal f = random_pulses(tg, rng);
        const WaveField u = solve_forward(q, SpeedProfile::constant(sg), f, sg, tg);
        for (DtnStencil st : {DtnStencil::OneSided3, DtnStencil::SummationByParts}) {
            const auto tr = dtn_trace(u, f, st).samples;
            for (int k = 0; tg.t(k) < f.t_lo - tg.dt(); ++k) EXPECT_EQ(tr[k], 0.0);
        }
    }
}

TEST(Wave1d, FrontWindowEnergyDoesNotGrow) {
    const SpatialGrid sg(801);
    const TimeGrid tg = TimeGrid::covering(1.5, 1.0 / 840.0);
    const PotentialGrid q = PotentialGrid::sample(sg, [](double x) { return 5.0 * reference_bump(x); });
    const SpeedProfile c = SpeedProfile::constant(sg);
    const SourceSignal f = make_bump_source(tg, 0.1, 0.6);
    const WaveField u = solve_forward(q, c, f, sg, tg);
    const EnergyTrace E = energy_trace(u, q, c, EnergyWindow::front(travel_time(c), f.t_hi));
    double peak = 0.0;
    for (double e : E.values) peak = std::max(peak, e);
    ASSERT_GT(peak, 0.0);
    const int k0 = tg.index_of(f.t_hi) + 1;
    for (int k = k0 + 1; k < tg.size(); ++k) {
        if (E.degenerate[k]) continue;
        EXPECT_LE(E.values[k], E.values[k - 1] + 1e-6 * peak) << "k=" << k;
    }
}

TEST(Wave1d, TravelTimeOfLinearSpeed) {
    const SpatialGrid sg(401);
    const SpeedProfile c = SpeedProfile::sample(sg, [](double x) { return 1.0 + x; });
    const TravelTimeProfile tt = travel_time(c);
    EXPECT_NEAR(tt.total(), std::log(2.0), 1e-10);
    for (double x : {0.1, 0.37, 0.8}) {
        EXPECT_NEAR(tt.rho_at(x), std::log1p(x), 1e-10);
        // Two linear interpolations (inverting rho on the x grid, then the r table), each bounded by
        // step^2 max|second derivative| / 8; here |r''| <= 2 in t and |rho''| c <= 1 in x.
        const double bound = (tt.dt_table * tt.dt_table * 2.0 + tt.dx * tt.dx * 1.0) / 8.0;
        EXPECT_NEAR(tt.r_of_t(std::log1p(x)), x, bound);
    }
}

TEST(Wave1d, RejectsCourantAboveOne) {
    const SpatialGrid sg(101);
    const TimeGrid tg = TimeGrid::covering(1.0, 0.02);
    const SourceSignal f = make_bump_source(tg, 0.1, 0.3);
    EXPECT_THROW(solve_forward(PotentialGrid::zero(sg), SpeedProfile::constant(sg), f, sg, tg), PreconditionError);
}

TEST(Wave1d, ReflectionFromTheFarEnd) {
    // u = f(t - x) - f(t + x - 2) for f supported in (0, 0.5) and t < 2; exact at unit Courant number.
    const SpatialGrid sg(201);
    const TimeGrid tg = TimeGrid::covering(1.95, sg.dx());
    const SourceSignal f = make_bump_source(tg, 0.05, 0.45);
    const WaveField u = solve_forward(PotentialGrid::zero(sg), SpeedProfile::constant(sg), f, sg, tg);
    double err = 0.0;
    for (int k = 0; k < tg.size(); ++k)
        for (int i = 0; i < sg.size(); ++i) {
            const double t = tg.t(k), x = sg.x(i);
            err = std::max(err, std::abs(u.u(k, i) - (f.value(t - x) - f.value(t + x - 2.0))));
        }
    EXPECT_LT(err, 1e-12);
}

TEST(Wave1d, ZeroSourceGivesZeroField) {
    const SpatialGrid sg(101);
    const TimeGrid tg = TimeGrid::covering(1.0, 0.009);
    const PotentialGrid q = PotentialGrid::sample(sg, reference_bump);
    const WaveField u = solve_forward(q, SpeedProfile::constant(sg), zero_source(tg), sg, tg);
    for (double v : u.u.values()) ASSERT_EQ(v, 0.0);
    for (double v : dtn_trace(u, zero_source(tg)).samples) ASSERT_EQ(v, 0.0);
    EXPECT_EQ(finite_speed_leakage(u, zero_source(tg), travel_time(SpeedProfile::constant(sg))), 0.0);
}

TEST(Wave1d, FreeTraceIsMinusSourceDerivative) {
    // Lf = u_x(t, 0) = -f'(t) before the reflection returns at t = 2; error O(dx^2) for the 3-point stencil.
    double prev = 0.0;
    for (int n : {201, 401}) {
        const SpatialGrid sg(n);
        const TimeGrid tg = TimeGrid::covering(1.9, 1.0 / (1.05 * (n - 1)));
        const SourceSignal f = make_bump_source(tg, 0.1, 0.5);
        const WaveField u = solve_forward(PotentialGrid::zero(sg), SpeedProfile::constant(sg), f, sg, tg);
        const auto tr = dtn_trace(u, f, DtnStencil::OneSided3).samples;
        double err = 0.0, peak = 0.0;
        for (int k = 0; k < tg.size(); ++k) {
            err = std::max(err, std::abs(tr[k] + f.derivative(tg.t(k))));
            peak = std::max(peak, std::abs(f.derivative(tg.t(k))));
        }
        if (prev > 0.0) {
            EXPECT_GE(std::log2(prev / err), 1.8);
            EXPECT_LT(err, 0.02 * peak);
        }
        prev = err;
    }
}

TEST(Wave1d, TravelTimeOfConstantSpeeds) {
    const SpatialGrid sg(101);
    const TravelTimeProfile one = travel_time(SpeedProfile::constant(sg));
    for (double x : {0.0, 0.25, 0.9}) {
        EXPECT_NEAR(one.rho_at(x), x, 1e-14);
        EXPECT_NEAR(one.r_of_t(x), x, 1e-14);
    }
    EXPECT_NEAR(travel_time(SpeedProfile::constant(sg, 2.0)).total(), 0.5, 1e-14);
    EXPECT_THROW(travel_time(SpeedProfile{std::vector<double>(101, -1.0)}), PreconditionError);
}

TEST(Wave1d, VariableSpeedFrontEnergyDoesNotGrow) {
    const SpatialGrid sg(801);
    const SpeedProfile c = SpeedProfile::sample(sg, [](double x) { return 1.0 + 0.5 * x; });
    const TimeGrid tg = TimeGrid::covering(1.2, 0.99 / (1.5 * 800));
    const PotentialGrid q = PotentialGrid::zero(sg);
    const SourceSignal f = make_bump_source(tg, 0.1, 0.6);
    const WaveField u = solve_forward(q, c, f, sg, tg);
    const EnergyTrace E = energy_trace(u, q, c, EnergyWindow::front(travel_time(c), f.t_hi));
    const int k0 = tg.index_of(f.t_hi) + 1;
    const double e0 = E.values[k0];
    ASSERT_GT(e0, 0.0);
    for (int k = k0 + 1; k < tg.size(); ++k)
        if (!E.degenerate[k]) EXPECT_LE(E.values[k] - E.values[k - 1], 1e-6 * e0) << "k=" << k;
}
