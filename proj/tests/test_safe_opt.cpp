#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "safeban/errors.hpp"
#include "safeban/safe_opt.hpp"

using namespace safeban;
using namespace safeban::testing;

TEST(SafeOpt, DeclaredSafeIsConservative) {
    // every parameter in the region keeps a declared-safe action safe
    RandomStream rng(41);
    const Mat B{{0.6, 1.8}, {1.8, 0.4}};
    for (int trial = 0; trial < 50; ++trial) {
        const ConfidenceRegion r = random_region(rng, Vec{0.9, 0.044}, RegionKind::ell1);
        const auto verts = l1_vertices(r);
        for (int k = 0; k < 100; ++k) {
            const Vec x = random_vec(rng, 2);
            if (!declared_safe(r, B, 0.9, x)) continue;
            for (const auto& v : verts) EXPECT_LE(dot(v, B * x), 0.9 + 1e-12);
        }
    }
}

TEST(SafeOpt, FiniteL1MatchesExhaustive) {
    RandomStream rng(42);
    int compared = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 2 + rng.index(4);
        const Mat B = random_matrix(rng, d, 0.0, 0.5);
        Vec mu = rng.normal_vec(d);
        mu *= 1.0 / norm2(mu);
        std::vector<Vec> arms;
        for (int k = 0; k < 15; ++k) arms.push_back(rng.in_unit_ball(d));
        const double c = rng.uniform(0.2, 1.0);
        const ConfidenceRegion r = random_region(rng, mu, RegionKind::ell1);
        const auto ex = exhaustive_ofu(r, B, c, arms);
        if (!ex.any_safe) {
            EXPECT_THROW(ofu_finite(r, B, c, arms), NoSafeActionError);
            continue;
        }
        const auto got = ofu_finite(r, B, c, arms);
        EXPECT_EQ(got.arm_index, ex.index);
        EXPECT_EQ(got.value, ex.value);
        EXPECT_EQ(got.optimist, l1_vertices(r)[ex.vertex]);
        ++compared;
    }
    EXPECT_GT(compared, 50);
}

TEST(SafeOpt, FiniteL2MatchesSampledMinimum) {
    RandomStream rng(43);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 3;
        const Mat B = random_matrix(rng, d, 0.0, 0.5);
        const Vec mu = random_vec(rng, d);
        std::vector<Vec> arms;
        for (int k = 0; k < 10; ++k) arms.push_back(rng.in_unit_ball(d));
        const ConfidenceRegion r = random_region(rng, mu, RegionKind::ell2);
        const double c = 2.0;
        if (safe_members_finite(r, B, c, arms).empty()) continue;
        const auto got = ofu_finite(r, B, c, arms);
        EXPECT_TRUE(contains(r, got.optimist, 1e-9));
        EXPECT_NEAR(dot(got.optimist, got.action), got.value, 1e-10);
        // sampled parameters never beat the closed-form optimum on safe arms
        const Mat s = inv_sqrt(r.gram);
        for (int k = 0; k < 3000; ++k) {
            const Vec v = r.center + s * rng.on_unit_sphere(d) * r.radius;
            for (std::size_t a : safe_members_finite(r, B, c, arms)) EXPECT_GE(dot(v, arms[a]), got.value - 1e-10);
        }
    }
}

TEST(SafeOpt, PolytopeMatchesExhaustiveGrid) {
    RandomStream rng(44);
    int compared = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto pc = random_polytope_case(rng);
        const ConfidenceRegion r = random_region(rng, pc.mu, RegionKind::ell1);
        const BoxGrid grid(pc.box);
        const auto ex = exhaustive_ofu(r, pc.B, pc.c, grid.points());
        if (!ex.any_safe) {
            EXPECT_THROW(ofu_l1_polytope(r, pc.B, pc.c, pc.box), NoSafeActionError);
            continue;
        }
        const auto got = ofu_l1_polytope(r, pc.B, pc.c, pc.box);
        EXPECT_EQ(got.arm_index, ex.index);
        EXPECT_EQ(got.action, grid.points()[ex.index]);
        EXPECT_EQ(got.value, ex.value);
        ++compared;
    }
    EXPECT_GE(compared, 15);
}

TEST(SafeOpt, PolytopeSafeMaskMatchesPointwiseTest) {
    RandomStream rng(45);
    const auto pc = random_polytope_case(rng, 41);
    const PolytopeOfuSolver solver(pc.B, pc.box);
    for (int trial = 0; trial < 5; ++trial) {
        const ConfidenceRegion r = random_region(rng, pc.mu, RegionKind::ell1);
        const auto mask = solver.safe_mask(r, pc.c);
        const auto& pts = solver.grid().points();
        for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(mask[i] != 0, declared_safe(r, pc.B, pc.c, pts[i]));
    }
}

TEST(SafeOpt, PolytopeHigherDimensionMatchesExhaustive) {
    RandomStream rng(46);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t d = 3 + trial % 2;
        BoxPolytope b{Vec(d), Vec(d), 7};
        for (std::size_t j = 0; j < d; ++j) {
            b.lower[j] = -1.0;
            b.upper[j] = 1.0;
        }
        const Mat B = random_matrix(rng, d, -1.0, 1.0);
        const ConfidenceRegion r = random_region(rng, random_vec(rng, d), RegionKind::ell1);
        const BoxGrid grid(b);
        const auto ex = exhaustive_ofu(r, B, 1.0, grid.points());
        ASSERT_TRUE(ex.any_safe);  // the origin is always certified safe when c > 0
        const auto got = ofu_l1_polytope(r, B, 1.0, b);
        EXPECT_EQ(got.arm_index, ex.index);
        EXPECT_EQ(got.value, ex.value);
    }
}

TEST(SafeOpt, L2RegionRejectedByPolytopeSolver) {
    const auto inst = polytope_instance(11);
    const ConfidenceRegion r(Vec{0.0, 0.0}, Mat::identity(2), 1.0, RegionKind::ell2);
    EXPECT_THROW(ofu_l1_polytope(r, inst.B(), inst.c(), std::get<BoxPolytope>(inst.action_set())), std::invalid_argument);
}

TEST(SafeOpt, GapLowerBoundNeverExceedsTrueGapWhenCovered) {
    RandomStream rng(47);
    int covered = 0, positive = 0;
    for (int trial = 0; trial < 60; ++trial) {
        RandomStream inst_rng(1000 + trial);
        const auto inst = sample_karmed_instance(inst_rng);
        const auto& arms = std::get<FiniteArms>(inst.action_set()).vectors;
        const double gap = safety_gap(inst);
        // region around μ that contains it
        Mat a = random_spd(rng, 4, 0.05);
        a *= rng.uniform(50.0, 5000.0);
        const Vec center = inst.mu() + inv_sqrt(a) * rng.on_unit_sphere(4) * rng.uniform(0.0, 0.4);
        const ConfidenceRegion r(center, a, rng.uniform(0.2, 0.6), RegionKind::ell1);
        if (!contains(r, inst.mu())) continue;
        ++covered;
        const double lcb = gap_lower_bound_karmed(r, inst.B(), inst.c(), arms);
        EXPECT_GE(lcb, 0.0);
        EXPECT_LE(lcb, gap + 1e-9) << "trial " << trial;
        if (lcb > 0.0) ++positive;
    }
    EXPECT_GT(covered, 30);
    EXPECT_GT(positive, 0);
}

TEST(SafeOpt, GapLowerBoundBelowSampledFeasibleValues) {
    // Sampling the region gives a superset of each Y^i, hence a subset of the
    // feasible parameters, so every sampled value bounds Δ^i from above.
    RandomStream rng(48);
    for (int trial = 0; trial < 10; ++trial) {
        RandomStream inst_rng(2000 + trial);
        const auto inst = sample_karmed_instance(inst_rng);
        const auto& arms = std::get<FiniteArms>(inst.action_set()).vectors;
        Mat a = random_spd(rng, 4, 0.05);
        a *= 200.0;
        const ConfidenceRegion r(inst.mu(), a, 0.3, RegionKind::ell1);
        const double lcb = gap_lower_bound_karmed(r, inst.B(), inst.c(), arms);

        const Mat P = inv_sqrt(a);
        const double rho = r.effective_radius();
        std::vector<Vec> samples;
        for (int k = 0; k < 4000; ++k) {
            // uniform-ish point of the ℓ1 ball: random signs, Dirichlet-like radii
            Vec u(4);
            double s = 0.0;
            for (auto& x : u) {
                x = -std::log(1.0 - rng.uniform());
                s += x;
            }
            s += -std::log(1.0 - rng.uniform());
            for (auto& x : u) x = (rng.uniform() < 0.5 ? -1 : 1) * rho * x / s;
            samples.push_back(r.center + P * u);
        }
        const std::size_t K = arms.size();
        double sampled_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < K; ++i) {
            std::vector<const Vec*> in_ci;
            for (const auto& v : samples)
                if (dot(v, inst.B() * arms[i]) <= inst.c()) in_ci.push_back(&v);
            if (in_ci.empty()) continue;
            std::vector<std::size_t> Y;
            for (std::size_t j = 0; j < K; ++j) {
                double m = -1e300;
                for (const Vec* v : in_ci) m = std::max(m, dot(*v, inst.B() * arms[j]));
                if (m <= inst.c()) Y.push_back(j);
            }
            for (const Vec* v : in_ci) {
                bool optimal = true;
                for (std::size_t j : Y) optimal = optimal && dot(*v, arms[i]) <= dot(*v, arms[j]);
                if (optimal) sampled_min = std::min(sampled_min, inst.c() - dot(*v, inst.B() * arms[i]));
            }
        }
        if (std::isfinite(sampled_min)) { EXPECT_LE(lcb, std::max(0.0, sampled_min) + 1e-9) << "trial " << trial; }
    }
}

TEST(SafeOpt, GapLowerBoundZeroForHugeRegion) {
    RandomStream inst_rng(5);
    const auto inst = sample_karmed_instance(inst_rng);
    const ConfidenceRegion r(inst.mu(), Mat::identity(4), 50.0, RegionKind::ell1);
    EXPECT_EQ(gap_lower_bound_karmed(r, inst.B(), inst.c(), std::get<FiniteArms>(inst.action_set()).vectors), 0.0);
}

TEST(SafeOpt, GapLowerBoundApproachesTruthForTinyRegion) {
    RandomStream inst_rng(6);
    const auto inst = sample_karmed_instance(inst_rng);
    const ConfidenceRegion r(inst.mu(), Mat::identity(4, 1e10), 1.0, RegionKind::ell1);
    const double lcb = gap_lower_bound_karmed(r, inst.B(), inst.c(), std::get<FiniteArms>(inst.action_set()).vectors);
    EXPECT_NEAR(lcb, safety_gap(inst), 1e-3);
}
