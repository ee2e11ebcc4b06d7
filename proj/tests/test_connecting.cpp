#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bcw/connecting.hpp"

using namespace bcw;

namespace {

struct Setup {
    SpatialGrid sg{201};
    TimeGrid tg = TimeGrid::covering(2.0, 1.0 / 210.0);
    DtnMatrix L = assemble_dtn([](double x) { return 5.0 * reference_bump(x); }, sg, tg);
};

const Setup& setup() {
    static const Setup s;
    return s;
}

SourceSignal random_source(const TimeGrid& tg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lo(0.0, 0.8), width(0.1, 0.6), amp(-1.0, 1.0);
    const double a = lo(rng);
    return make_source(tg, {{Pulse::Shape::Bump, a, a + width(rng), amp(rng)},
                            {Pulse::Shape::CubicBSpline, a + 0.05, a + 0.05 + width(rng), amp(rng)}});
}

double valid_sup(const ConnectingKernel& W) {
    double m = 0.0;
    for (int k = 0; k < W.tg.size(); ++k)
        for (int j = 0; W.valid(k, j); ++j) m = std::max(m, std::abs(W.W(k, j)));
    return m;
}

} // namespace

TEST(Connecting, DtnMatrixIsCausal) {
    // The three-point stencil is strictly causal; the SBP stencil also reads f one step ahead
    // through its second time difference.
    const auto& s = setup();
    const DtnMatrix one_sided =
        assemble_dtn([](double x) { return 5.0 * reference_bump(x); }, s.sg, s.tg, {DtnStencil::OneSided3, 1, 1});
    for (int i = 0; i < s.L.size(); ++i)
        for (int j = i + 1; j < s.L.size(); ++j) {
            ASSERT_EQ(one_sided.entries(i, j), 0.0);
            if (j > i + 1) ASSERT_EQ(s.L.entries(i, j), 0.0);
        }
}

TEST(Connecting, MatrixReproducesForwardTrace) {
    const auto& s = setup();
    std::mt19937_64 rng(3);
    const SourceSignal f = random_source(s.tg, rng);
    const WaveField u = solve_forward(PotentialGrid::sample(s.sg, [](double x) { return 5.0 * reference_bump(x); }),
                                      SpeedProfile::constant(s.sg), f, s.sg, s.tg);
    const auto direct = dtn_trace(u, f, DtnStencil::SummationByParts).samples;
    const auto viaL = s.L.apply(f);
    double err = 0.0, peak = 0.0;
    for (std::size_t k = 0; k < direct.size(); ++k) {
        err = std::max(err, std::abs(direct[k] - viaL[k]));
        peak = std::max(peak, std::abs(direct[k]));
    }
    EXPECT_LT(err, 1e-11 * peak);
}

TEST(Connecting, KernelSymmetry) {
    const auto& s = setup();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        const SourceSignal f = random_source(s.tg, rng), h = random_source(s.tg, rng);
        const ConnectingKernel a = blagoveshchenskii(f, h, s.L), b = blagoveshchenskii(h, f, s.L);
        const double peak = valid_sup(a);
        for (int k = 0; k < s.tg.size(); ++k)
            for (int j = 0; a.valid(k, j); ++j) ASSERT_NEAR(a.W(k, j), b.W(j, k), 1e-10 * peak);
    }
}

TEST(Connecting, KernelBilinearity) {
    const auto& s = setup();
    std::mt19937_64 rng(9);
    const SourceSignal f = random_source(s.tg, rng), g = random_source(s.tg, rng), h = random_source(s.tg, rng);
    const double a = 0.7, b = -1.3;
    const ConnectingKernel lhs = blagoveshchenskii(combine(a, f, b, g), h, s.L);
    const ConnectingKernel wf = blagoveshchenskii(f, h, s.L), wg = blagoveshchenskii(g, h, s.L);
    const double peak = valid_sup(lhs);
    for (int k = 0; k < s.tg.size(); ++k)
        for (int j = 0; lhs.valid(k, j); ++j) ASSERT_NEAR(lhs.W(k, j), a * wf.W(k, j) + b * wg.W(k, j), 1e-10 * peak);
}

TEST(Connecting, FastDiagonalMatchesKernel) {
    const auto& s = setup();
    std::mt19937_64 rng(13);
    const SourceSignal f = random_source(s.tg, rng), h = random_source(s.tg, rng);
    const auto diag = diagonal(blagoveshchenskii(f, h, s.L));
    const DiagonalEvaluator ef(f, s.L), eh(h, s.L);
    double peak = 0.0;
    for (double d : diag) peak = std::max(peak, std::abs(d));
    for (int K = 0; K <= ef.max_index(); ++K) ASSERT_NEAR(ef.value(eh, K), diag[K], 1e-11 * peak) << "K=" << K;
}

TEST(Connecting, KernelMatchesInteriorInnerProduct) {
    // W(t, s) = (u^f(t), u^h(s)) in L2(0, 1); the oracle integrates the interior fields directly.
    const auto& s = setup();
    std::mt19937_64 rng(17);
    const SourceSignal f = random_source(s.tg, rng), h = random_source(s.tg, rng);
    const PotentialGrid q = PotentialGrid::sample(s.sg, [](double x) { return 5.0 * reference_bump(x); });
    const SpeedProfile c = SpeedProfile::constant(s.sg);
    const WaveField uf = solve_forward(q, c, f, s.sg, s.tg), uh = solve_forward(q, c, h, s.sg, s.tg);
    const ConnectingKernel W = blagoveshchenskii(f, h, s.L);
    const double peak = valid_sup(W);
    for (int k = 0; k < s.tg.size(); k += 17)
        for (int j = 0; W.valid(k, j); j += 13) {
            double ip = 0.0;
            for (int i = 0; i < s.sg.size(); ++i)
                ip += (i == 0 || i == s.sg.size() - 1 ? 0.5 : 1.0) * uf.u(k, i) * uh.u(j, i);
            ASSERT_NEAR(W.W(k, j), ip * s.sg.dx(), 1e-9 * peak);
        }
}

TEST(Connecting, ZeroSourceGivesZeroKernel) {
    const auto& s = setup();
    std::mt19937_64 rng(21);
    const ConnectingKernel W = blagoveshchenskii(zero_source(s.tg), random_source(s.tg, rng), s.L);
    for (double v : W.W.values()) ASSERT_EQ(v, 0.0);
}

TEST(Connecting, DiagonalOfEqualSourcesIsNonNegative) {
    const auto& s = setup();
    std::mt19937_64 rng(23);
    const SourceSignal f = random_source(s.tg, rng);
    const auto d = diagonal(blagoveshchenskii(f, f, s.L));
    double peak = 0.0;
    for (double v : d) peak = std::max(peak, std::abs(v));
    for (std::size_t k = 0; k < d.size() / 2; ++k) EXPECT_GE(d[k], -1e-8 * peak);
}
