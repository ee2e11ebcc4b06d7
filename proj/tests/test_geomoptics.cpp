#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "bcw/errors.hpp"
#include "bcw/geomoptics.hpp"

using namespace bcw;

namespace {

constexpr double kW = 0.1;

double chi(double t) {
    return smooth_bump(t, -kW, kW);
}

double one(double) {
    return 1.0;
}

double five_bump(double x) {
    return 5.0 * reference_bump(x);
}

const SpacetimeFunction q_bump = [](double, double x, double) { return five_bump(x); };
const SpacetimeFunction q_zero = [](double, double, double) { return 0.0; };

} // namespace

TEST(GeomOptics, PlaneWavePhasesSolveTheEikonalEquation) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < 50; ++i) {
        const double a = ang(rng);
        EXPECT_NEAR(PlaneWavePhase::make({std::cos(a), std::sin(a)}).eikonal_residual(), 0.0, 1e-14);
    }
    EXPECT_EQ(PlaneWavePhase::make({-1.0}).eikonal_residual(), 0.0);
    EXPECT_THROW(PlaneWavePhase::make({0.5, 0.5}), PreconditionError);
}

TEST(GeomOptics, FirstAmplitudeForConstantPotential) {
    // q = 3, a_0 = chi(t - x - tau0): box a_0 = 0, so a_1 = (i/2) int_0^t 3 a_0 ds = 1.5 i t chi.
    const GOGrid g = GOGrid::box1d(1.0, -0.5, 1.3, 0.005, 2);
    const SpacetimeFunction q3 = [](double, double, double) { return 3.0; };
    const AmplitudeStack st = build_amplitudes(1, chi, kW, one, q3, g, -0.1);
    double err = 0.0;
    for (int k = 0; k < g.nt; ++k)
        for (int i = 0; i < g.n1; ++i) {
            const cplx expected = cplx(0.0, 1.5) * g.t(k) * chi(g.t(k) - g.x1(i) + 0.1);
            err = std::max(err, std::abs(st.a[1].at(k, i) - expected));
        }
    EXPECT_LT(err, 1e-10);
}

TEST(GeomOptics, ResidualDecaysLikeSigmaToMinusN) {
    const std::vector<double> sigma{8, 16, 32, 64};
    const double h = 2.0 * std::numbers::pi / 640.0;
    for (int N : {1, 2, 3}) {
        const GOGrid g = GOGrid::box1d(1.2, -0.5, 1.5, h, N + 1);
        EXPECT_NEAR(residual_scaling(chi, kW, one, q_bump, N, sigma, g, -0.1).slope, -N, 0.05) << "N=" << N;
    }
}

TEST(GeomOptics, ResidualVanishesWithoutPotential) {
    const GOGrid g = GOGrid::box1d(1.2, -0.5, 1.5, 2.0 * std::numbers::pi / 640.0, 3);
    for (double s : {8.0, 64.0}) EXPECT_LT(residual_norm(build_ansatz(s, 2, chi, kW, one, q_zero, g, -0.1), q_zero), 1e-9);
}

TEST(GeomOptics, TwoDimensionalResidualScaling) {
    const std::vector<double> sigma{8, 16, 32};
    const double h = 2.0 * std::numbers::pi / 320.0;
    const Profile eta = [](double y) { return smooth_bump(y, -0.3, 0.3); };
    for (int N : {1, 2}) {
        const GOGrid g = GOGrid::box2d(1.0, -0.5, 1.3, -0.5, 0.5, h, 0.02, N + 1);
        EXPECT_NEAR(residual_scaling(chi, kW, eta, q_bump, N, sigma, g, -0.1).slope, -N, 0.1) << "N=" << N;
    }
}

TEST(GeomOptics, RefusesUnderResolvedSweeps) {
    const GOGrid g = GOGrid::box1d(1.2, -0.5, 1.5, 0.02, 2);
    EXPECT_THROW(residual_scaling(chi, kW, one, q_bump, 1, {8, 64}, g, -0.1), PreconditionError);
}

TEST(GeomOptics, ConjugationIdentityIsSecondOrder) {
    const auto phi = [](double t, double x) { return t * t + 0.3 * x + std::sin(x); };
    const auto a = [](double t, double x) { return cplx(std::cos(t + x), std::exp(-x * x)); };
    const double d1 = conjugation_defect(phi, a, 5.0, 0.02, 1.0, 0.0, 1.0);
    const double d2 = conjugation_defect(phi, a, 5.0, 0.01, 1.0, 0.0, 1.0);
    const double d3 = conjugation_defect(phi, a, 5.0, 0.005, 1.0, 0.0, 1.0);
    EXPECT_NEAR(std::log2(d1 / d2), 2.0, 0.15);
    EXPECT_NEAR(std::log2(d2 / d3), 2.0, 0.15);
}

TEST(GeomOptics, CertificateHoldsAtModerateFrequency) {
    CertifyOptions o;
    o.sigma_max = 64;
    const NonvanishingCertificate c = certify_nonvanishing(0.5, 1.2, five_bump, o);
    EXPECT_TRUE(c.certified);
    EXPECT_GE(c.u_abs, 0.5 * c.ansatz_abs);
    EXPECT_EQ(c.u0.size(), c.x.size());
}

TEST(GeomOptics, CertificateFailsWhenProfileVanishesOnTheRay) {
    CertifyOptions o;
    o.chi_peak = 0.0;
    o.sigma_max = 32;
    EXPECT_FALSE(certify_nonvanishing(0.5, 1.2, five_bump, o).certified);
}

TEST(GeomOptics, FreeWaveIsReproducedExactly) {
    // With q = 0 the ansatz is an exact grid solution, so u(T, x0) = chi(0) = 1.
    CertifyOptions o;
    o.sigma_max = 16;
    const NonvanishingCertificate c = certify_nonvanishing(0.5, 1.2, [](double) { return 0.0; }, o);
    EXPECT_TRUE(c.certified);
    EXPECT_NEAR(c.u_abs, 1.0, 1e-9);
    EXPECT_NEAR(c.ansatz_abs, 1.0, 1e-12);
}

TEST(GeomOptics, LogLogSlopeOfPowerLaw) {
    const std::vector<double> x{1, 2, 4, 8};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -2.5));
    EXPECT_NEAR(loglog_slope(x, y), -2.5, 1e-12);
}

TEST(GeomOptics, TransportIdentityHoldsAlongRays) {
    // d_s a_j = (i/2)(box + q) a_{j-1}, checked by a centered difference along the diagonal.
    const double h = 0.005;
    const GOGrid g = GOGrid::box1d(1.0, -0.5, 1.3, h, 3);
    const AmplitudeStack st = build_amplitudes(2, chi, kW, one, q_bump, g, -0.1);
    for (int j = 1; j <= 2; ++j) {
        double err = 0.0, peak = 0.0;
        for (int k = 2; k + 2 < g.nt; ++k)
            for (int i = 2; i + 2 < g.n1; ++i) {
                const cplx ds = (st.a[j].at(k + 1, i + 1) - st.a[j].at(k - 1, i - 1)) / (2.0 * h);
                const cplx rhs = cplx(0.0, 0.5) * wave_operator(st.a[j - 1], g, q_bump, k, i, 0);
                err = std::max(err, std::abs(ds - rhs));
                peak = std::max(peak, std::abs(rhs));
            }
        EXPECT_LT(err, 1e-2 * peak) << "j=" << j;
    }
}

TEST(GeomOptics, HigherAmplitudesVanishAtTimeZero) {
    const GOGrid g = GOGrid::box1d(1.0, -0.5, 1.3, 0.01, 4);
    const AmplitudeStack st = build_amplitudes(3, chi, kW, one, q_bump, g, -0.1);
    for (int j = 1; j <= 3; ++j)
        for (int i = 0; i < g.n1; ++i) ASSERT_EQ(st.a[j].at(0, i), cplx(0.0));
}

TEST(GeomOptics, OrderZeroAnsatzIsTheModulatedProfile) {
    const GOGrid g = GOGrid::box1d(1.0, -0.5, 1.3, 0.01, 1);
    const double sigma = 12.0;
    const GOAnsatz an = build_ansatz(sigma, 0, chi, kW, one, q_bump, g, -0.1);
    for (int k = 0; k < g.nt; k += 7)
        for (int i = 0; i < g.n1; i += 5) {
            const double t = g.t(k), x = g.x1(i);
            const cplx expected = std::exp(cplx(0.0, sigma * (t - x))) * chi(t - x + 0.1);
            ASSERT_LT(std::abs(an.value(k, i) - expected), 1e-12);
        }
}
