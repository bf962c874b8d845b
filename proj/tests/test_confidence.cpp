#include <gtest/gtest.h>

#include <cmath>

#include "safeban/confidence.hpp"
#include "test_util.hpp"

using namespace safeban;
using safeban::testing::random_spd;
using safeban::testing::random_vec;

TEST(Beta, FormulaAtKnownPoints) {
    const BetaSchedule s{0.1, 2, std::sqrt(2.0), 1.0, 0.9010771331, 0.01};
    // t = 1: R√(d log(1/δ)) + √λ S
    EXPECT_NEAR(beta(s, 1), 0.1 * std::sqrt(2.0 * std::log(100.0)) + 0.9010771331, 1e-14);
    // t = 101: growth 1 + 100·2 = 201
    EXPECT_NEAR(beta(s, 101), 0.1 * std::sqrt(2.0 * std::log(201.0 / 0.01)) + 0.9010771331, 1e-14);
    EXPECT_THROW(beta(s, 0), std::invalid_argument);
}

TEST(Beta, NondecreasingOverHorizon) {
    const BetaSchedule s{0.1, 2, std::sqrt(2.0), 1.0, 0.9, 0.01};
    double prev = beta(s, 1);
    for (std::uint64_t t = 2; t <= 100000; ++t) {
        const double b = beta(s, t);
        ASSERT_GE(b, prev) << "t=" << t;
        prev = b;
    }
}

TEST(Beta, Validation) {
    EXPECT_THROW((BetaSchedule{0.1, 2, 1.0, 1.0, 1.0, 0.0}).validate(), std::invalid_argument);
    EXPECT_THROW((BetaSchedule{0.1, 2, 1.0, 0.0, 1.0, 0.1}).validate(), std::invalid_argument);
    EXPECT_THROW((BetaSchedule{-0.1, 2, 1.0, 1.0, 1.0, 0.1}).validate(), std::invalid_argument);
}

TEST(Region, L1ContainsL2) {
    RandomStream rng(21);
    for (std::size_t d = 2; d <= 5; ++d) {
        const Mat a = random_spd(rng, d, 0.5);
        const Vec c = random_vec(rng, d);
        const ConfidenceRegion r2(c, a, 0.7, RegionKind::ell2), r1(c, a, 0.7, RegionKind::ell1);
        const Mat ai_sqrt = inv_sqrt(a);
        for (int i = 0; i < 2000; ++i) {
            // uniform on the ℓ2 ellipsoid boundary
            const Vec v = c + ai_sqrt * rng.on_unit_sphere(d) * 0.7;
            ASSERT_TRUE(contains(r2, v, 1e-9));
            ASSERT_TRUE(contains(r1, v, 1e-9));
        }
    }
}

TEST(Region, VerticesLieOnTheL1Boundary) {
    RandomStream rng(22);
    const std::size_t d = 3;
    const Mat a = random_spd(rng, d, 0.5);
    const ConfidenceRegion r(random_vec(rng, d), a, 0.4, RegionKind::ell1);
    const auto verts = l1_vertices(r);
    ASSERT_EQ(verts.size(), 2 * d);
    const Mat s = sqrt_spd(a);
    for (std::size_t k = 0; k < verts.size(); ++k) {
        const Vec z = s * (verts[k] - r.center);
        EXPECT_NEAR(norm1(z), r.effective_radius(), 1e-10);
        EXPECT_NEAR(std::abs(z[k / 2]), r.effective_radius(), 1e-10);
        EXPECT_GT(k % 2 == 0 ? z[k / 2] : -z[k / 2], 0.0);
    }
    EXPECT_THROW(l1_vertices(ConfidenceRegion(r.center, a, 0.4, RegionKind::ell2)), std::invalid_argument);
}

TEST(Region, LinearBoundIsSupportFunctionForL2) {
    RandomStream rng(23);
    const std::size_t d = 3;
    const Mat a = random_spd(rng, d, 0.5);
    const ConfidenceRegion r(random_vec(rng, d), a, 0.6, RegionKind::ell2);
    const Mat ai_sqrt = inv_sqrt(a);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec w = random_vec(rng, d);
        const double bound = max_linear_over_region(r, w);
        double best = -1e300;
        for (int i = 0; i < 20000; ++i) best = std::max(best, dot(r.center + ai_sqrt * rng.on_unit_sphere(d) * 0.6, w));
        EXPECT_LE(best, bound + 1e-12);
        EXPECT_GT(best, bound - 1e-2 * (1.0 + std::abs(bound)));
        // maximizer in closed form: center + β A⁻¹w / ‖w‖_{A⁻¹}
        const Vec arg = r.center + r.gram_inv * w * (0.6 / weighted_norm(w, r.gram_inv));
        EXPECT_NEAR(dot(arg, w), bound, 1e-10);
    }
}

TEST(Region, L1LinearBoundDominatesVertexMaximum) {
    RandomStream rng(24);
    for (std::size_t d = 2; d <= 5; ++d) {
        const Mat a = random_spd(rng, d, 0.5);
        const ConfidenceRegion r(random_vec(rng, d), a, 0.5, RegionKind::ell1);
        const auto verts = l1_vertices(r);
        for (int trial = 0; trial < 100; ++trial) {
            const Vec w = random_vec(rng, d);
            double vmax = -1e300;
            for (const auto& v : verts) vmax = std::max(vmax, dot(v, w));
            EXPECT_LE(vmax, max_linear_over_region(r, w) + 1e-12);
        }
    }
}

TEST(Region, AlphaInUnitInterval) {
    RandomStream rng(25);
    const Mat B{{0.6, 1.8}, {1.8, 0.4}};
    const Vec mu{0.9, 0.044}, xs{-1.0, -1.0};
    for (int i = 0; i < 200; ++i) {
        const Mat a = random_spd(rng, 2, rng.uniform(0.01, 100.0));
        const double al = alpha_t(mu, B, 0.9, xs, a, rng.uniform(0.0, 5.0));
        EXPECT_GE(al, 0.0);
        EXPECT_LE(al, 1.0);
    }
    // huge A: the bound collapses to μᵀBx* < c, α = 1
    EXPECT_EQ(alpha_t(mu, B, 0.9, xs, Mat::identity(2, 1e12), 1.0), 1.0);
    // small A: α = c / (μᵀBx* + 2β‖Bx*‖_{A⁻¹})
    const double g = dot(mu, B * xs) + 2.0 * 3.0 * norm2(B * xs);
    EXPECT_NEAR(alpha_t(mu, B, 0.9, xs, Mat::identity(2), 3.0), 0.9 / g, 1e-14);
}
