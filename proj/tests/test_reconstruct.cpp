#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bcw/connecting.hpp"
#include "bcw/errors.hpp"
#include "bcw/reconstruct.hpp"

using namespace bcw;

namespace {

double gaussian_q(double x) {
    return 5.0 * std::exp(-50.0 * (x - 0.4) * (x - 0.4));
}

struct Setup {
    SpatialGrid sg{401};
    TimeGrid tg = TimeGrid::covering(3.0, 1.0 / 420.0);
    DtnMatrix L = assemble_dtn(gaussian_q, sg, tg);
    PipelineOptions po = [] {
        PipelineOptions o;
        o.product.delta = 0.005;
        o.product.alpha = 1e-12;
        o.product.x_min = 0.05;
        o.product.x_max = 0.95;
        return o;
    }();
    ReconstructionResult base = reconstruct(L, default_source_family(tg), po);
};

const Setup& setup() {
    static const Setup s;
    return s;
}

double masked_rel_error(const ReconstructionResult& r) {
    double e = 0.0, n = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i)
        if (r.mask[i]) {
            e += std::pow(r.q_est[i] - gaussian_q(r.x[i]), 2);
            n += std::pow(gaussian_q(r.x[i]), 2);
        }
    return std::sqrt(e / n);
}

} // namespace

TEST(Reconstruct, RecoversPotentialFromCleanData) {
    const auto& r = setup().base;
    EXPECT_LT(masked_rel_error(r), 0.15);
    EXPECT_GE(r.coverage, 0.6);
}

TEST(Reconstruct, InvariantUnderSourceSignFlips) {
    const auto& st = setup();
    auto h = default_source_family(st.tg);
    h[1] = combine(-1.0, h[1], 0.0, h[1]);
    h[4] = combine(-1.0, h[4], 0.0, h[4]);
    const ReconstructionResult r = reconstruct(st.L, h, st.po);
    double peak = 0.0;
    for (double v : st.base.q_est) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        EXPECT_EQ(r.mask[i], st.base.mask[i]);
        EXPECT_NEAR(r.q_est[i], st.base.q_est[i], 1e-10 * peak);
    }
}

TEST(Reconstruct, SecondSourceFamilyAgreesWithinErrorBars) {
    const auto& st = setup();
    const ReconstructionResult alt = reconstruct(st.L, alternate_source_family(st.tg), st.po);
    int common = 0;
    for (std::size_t i = 0; i < alt.x.size(); ++i) {
        if (!alt.mask[i] || !st.base.mask[i]) continue;
        ++common;
        EXPECT_LE(std::abs(alt.q_est[i] - st.base.q_est[i]), alt.spread[i] + st.base.spread[i] + 1e-12)
            << "x=" << alt.x[i];
    }
    EXPECT_GT(common, 100);
}

TEST(Reconstruct, NoiseBelowTheSymmetryGuardIsTolerated) {
    const auto& st = setup();
    DtnMatrix noisy = st.L;
    add_noise(noisy, 1e-12, 42);
    EXPECT_LT(masked_rel_error(reconstruct(noisy, default_source_family(st.tg), st.po)), 0.15);
    DtnMatrix again = st.L;
    add_noise(again, 1e-12, 42);
    EXPECT_EQ(again.entries, noisy.entries);
}

TEST(Reconstruct, NoiseThatBreaksGramSymmetryIsAFault) {
    const auto& st = setup();
    DtnMatrix noisy = st.L;
    add_noise(noisy, 1e-6, 42);
    EXPECT_THROW(reconstruct(noisy, default_source_family(st.tg), st.po), PipelineFault);
}

TEST(Reconstruct, PointwiseFormulaOnSeparableField) {
    // v = exp(a x + b T) gives (v_xx - v_TT)/v = (2cosh(a h) - 2cosh(b h)) / h^2 exactly on the stencil.
    const double a = 2.0, b = 0.5, h = 0.05;
    RecoveredField v;
    v.J = 1;
    for (int n = 0; n <= 80; ++n) v.x.push_back(0.1 + 0.01 * n);
    for (int l = 0; l < 7; ++l) v.T.push_back(1.1 + h * l);
    v.v.resize(1, v.nx() * v.nT());
    v.mask.assign(v.nx() * v.nT(), true);
    v.eigen_ratio.assign(v.nx() * v.nT(), 0.0);
    for (int l = 0; l < v.nT(); ++l)
        for (int n = 0; n < v.nx(); ++n) v.v(0, l * v.nx() + n) = std::exp(a * v.x[n] + b * v.T[l]);
    const ReconstructionResult r = recover_potential(v);
    const double expected = (2.0 * std::cosh(a * h) - 2.0 * std::cosh(b * h)) / (h * h);
    int covered = 0;
    for (int n = 0; n < v.nx(); ++n)
        if (r.mask[n]) {
            ++covered;
            EXPECT_NEAR(r.q_est[n], expected, 1e-8);
            EXPECT_LT(r.spread[n], 1e-8);
        }
    EXPECT_EQ(covered, v.nx() - 10);
    v.eigen_ratio.pop_back();
    EXPECT_THROW(recover_potential(v), PreconditionError);
}

TEST(Reconstruct, RankOneFactorsOfNoisySyntheticProducts) {
    // B = v v' with 1% multiplicative noise; v smooth in (x, T) so sign continuity has something to follow.
    const int J = 4;
    ProductTensor B;
    B.J = J;
    for (int n = 0; n < 30; ++n) B.x.push_back(0.1 + 0.02 * n);
    for (int l = 0; l < 5; ++l) B.T.push_back(1.1 + 0.05 * l);
    const auto truth = [](int j, double x, double T) { return std::sin(3.0 * x + j + 0.5 * T) + 0.1 * j; };
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 0.01);
    B.slices.assign(B.x.size() * B.T.size(), Eigen::MatrixXd(J, J));
    for (std::size_t l = 0; l < B.T.size(); ++l)
        for (std::size_t n = 0; n < B.x.size(); ++n) {
            Eigen::MatrixXd S(J, J);
            for (int j = 0; j < J; ++j)
                for (int k = j; k < J; ++k) {
                    S(j, k) = truth(j, B.x[n], B.T[l]) * truth(k, B.x[n], B.T[l]) * (1.0 + noise(rng));
                    S(k, j) = S(j, k);
                }
            B.at(static_cast<int>(n), static_cast<int>(l)) = S;
        }
    const RecoveredField v = factor_rank_one(B);
    double sign = 0.0, err = 0.0, peak = 0.0;
    for (std::size_t l = 0; l < B.T.size(); ++l)
        for (std::size_t n = 0; n < B.x.size(); ++n) {
            const int p = static_cast<int>(l * B.x.size() + n);
            ASSERT_TRUE(v.mask[p]);
            for (int j = 0; j < J; ++j) {
                const double t = truth(j, B.x[n], B.T[l]);
                if (sign == 0.0 && std::abs(t) > 0.5) sign = v.v(j, p) * t > 0.0 ? 1.0 : -1.0;
                peak = std::max(peak, std::abs(t));
            }
        }
    ASSERT_NE(sign, 0.0);
    for (std::size_t l = 0; l < B.T.size(); ++l)
        for (std::size_t n = 0; n < B.x.size(); ++n) {
            const int p = static_cast<int>(l * B.x.size() + n);
            for (int j = 0; j < J; ++j) err = std::max(err, std::abs(sign * v.v(j, p) - truth(j, B.x[n], B.T[l])));
        }
    EXPECT_LT(err, 0.03 * peak);
}
