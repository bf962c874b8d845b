#include <gtest/gtest.h>

#include <cmath>

#include "safeban/environment.hpp"
#include "safeban/errors.hpp"

using namespace safeban;

TEST(Environment, PolytopeInstanceOptimum) {
    const auto inst = polytope_instance();
    const auto opt = optimal_safe_action(inst);
    EXPECT_DOUBLE_EQ(opt.x[0], -1.0);
    EXPECT_DOUBLE_EQ(opt.x[1], -1.0);
    EXPECT_NEAR(opt.value, -0.944, 1e-12);
    // Δ = c - μᵀBx* = 0.9 + 2.4·0.9 ... computed directly
    const double g = 0.9 - (0.9 * (0.6 * -1 + 1.8 * -1) + 0.044 * (1.8 * -1 + 0.4 * -1));
    EXPECT_NEAR(safety_gap(inst), g, 1e-12);
    EXPECT_NEAR(safety_gap(inst), 3.1568, 1e-12);
    EXPECT_NEAR(inst.L(), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(inst.S(), std::hypot(0.9, 0.044), 1e-15);
}

TEST(Environment, BoxOptimumMatchesFineGrid) {
    // An instance whose safe optimum lies on the constraint boundary.
    InstanceParams p;
    p.mu = Vec{1.0, 0.5};
    p.B = Mat{{1.0, 0.0}, {0.0, 1.0}};
    p.c = 0.3;
    p.action_set = BoxPolytope{Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 101};
    const ProblemInstance inst(p);
    const auto opt = optimal_safe_action(inst);
    EXPECT_TRUE(is_safe(inst, opt.x));
    // the continuous optimum is x = (-1,-1) since μᵀBx = μᵀx ≤ 0.3 holds there
    EXPECT_NEAR(opt.value, -1.5, 1e-12);

    p.B = Mat{{-1.0, 0.0}, {0.0, -1.0}};  // constraint -μᵀx ≤ 0.3 cuts the box
    const ProblemInstance cut(p);
    const auto o2 = optimal_safe_action(cut);
    EXPECT_TRUE(is_safe(cut, o2.x));
    EXPECT_NEAR(o2.value, -0.3, 2e-3);  // boundary optimum up to grid refinement
    EXPECT_NEAR(safety_gap(cut), 0.0, 2e-3);
}

TEST(Environment, InstanceValidation) {
    InstanceParams p;
    p.mu = Vec{1.0, 0.0};
    p.B = Mat::identity(2);
    p.c = 0.0;
    p.action_set = FiniteArms{{Vec{0.0, 0.0}}};
    EXPECT_THROW(ProblemInstance{p}, ConfigError);
    p.c = 1.0;
    p.S = 0.5;
    EXPECT_THROW(ProblemInstance{p}, ConfigError);
    p.S.reset();
    p.action_set = BoxPolytope{Vec{0.0, -1.0}, Vec{1.0, 1.0}, 11};
    EXPECT_THROW(ProblemInstance{p}, ConfigError);
    p.action_set = FiniteArms{{Vec{0.0, 0.0, 0.0}}};
    EXPECT_THROW(ProblemInstance{p}, ConfigError);
    p.action_set = FiniteArms{{Vec{2.0, 0.0}}};
    p.L = 1.0;
    EXPECT_THROW(ProblemInstance{p}, ConfigError);
}

TEST(Environment, LargeLossesWarn) {
    InstanceParams p;
    p.mu = Vec{2.0, 0.0};
    p.B = Mat::identity(2);
    p.c = 1.0;
    p.action_set = FiniteArms{{Vec{1.0, 0.0}, Vec{0.0, 0.0}}};
    EXPECT_FALSE(ProblemInstance(p).warnings().empty());
}

TEST(Environment, NoSafeArmIsAContractError) {
    InstanceParams p;
    p.mu = Vec{1.0, 0.0};
    p.B = Mat::identity(2);
    p.c = 0.5;
    p.action_set = FiniteArms{{Vec{1.0, 0.0}}};
    const ProblemInstance inst(p);
    EXPECT_THROW(optimal_safe_action(inst), EnvironmentContractError);
}

TEST(Environment, NoiseIsCenteredWithScaleR) {
    const auto inst = polytope_instance(101, 0.1);
    RandomStream rng(3);
    const Vec x{0.2, -0.4};
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double e = sample_loss(inst, x, rng) - inst.expected_loss(x);
        s += e;
        s2 += e * e;
    }
    EXPECT_NEAR(s / n, 0.0, 2e-3);
    EXPECT_NEAR(std::sqrt(s2 / n), 0.1, 2e-3);
}

TEST(Environment, UniformNoiseIsBounded) {
    InstanceParams p;
    p.mu = Vec{0.5, 0.0};
    p.B = Mat::identity(2);
    p.c = 1.0;
    p.R = 0.1;
    p.noise = NoiseKind::Uniform;
    p.action_set = FiniteArms{{Vec{0.0, 0.0}}};
    const ProblemInstance inst(p);
    RandomStream rng(4);
    double sum2 = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double e = sample_loss(inst, Vec{0.0, 0.0}, rng);
        EXPECT_LE(std::abs(e), 0.1 * std::sqrt(3.0) + 1e-15);
        sum2 += e * e;
    }
    EXPECT_NEAR(std::sqrt(sum2 / 10000), 0.1, 0.005);
}

TEST(Environment, KarmedInstanceShape) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RandomStream rng(seed);
        const auto inst = sample_karmed_instance(rng);
        ASSERT_EQ(inst.dim(), 4u);
        EXPECT_NEAR(norm2(inst.mu()), 1.0, 1e-12);
        EXPECT_DOUBLE_EQ(inst.S(), 1.0);
        const auto& arms = std::get<FiniteArms>(inst.action_set()).vectors;
        ASSERT_EQ(arms.size(), 15u);
        std::size_t warm = 0;
        for (std::size_t a = 0; a < arms.size(); ++a) {
            EXPECT_LE(norm2(arms[a]), 1.0 + 1e-12);
            if (norm2(inst.B() * arms[a]) <= inst.c() / inst.S()) ++warm;
        }
        for (std::size_t a = 0; a < 5; ++a) EXPECT_LE(norm2(inst.B() * arms[a]), inst.c());
        EXPECT_GE(warm, 5u);
        EXPECT_GT(safety_gap(inst), 0.0);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                EXPECT_GE(inst.B()(i, j), 0.0);
                EXPECT_LE(inst.B()(i, j), 0.5);
            }
    }
}

TEST(Environment, ContextGeneration) {
    InstanceParams p;
    p.mu = Vec{0.6, 0.0, 0.8};
    p.B = Mat{{0.5, 0.1, 0.0}, {0.0, 0.4, 0.2}, {0.1, 0.0, 0.6}};
    p.c = 0.3;
    p.action_set = Contextual{15, 5, 99};
    const ProblemInstance inst(p);
    const auto a1 = generate_context(inst, 1), a1b = generate_context(inst, 1), a2 = generate_context(inst, 2);
    ASSERT_EQ(a1.size(), 15u);
    EXPECT_EQ(a1, a1b);
    EXPECT_NE(a1, a2);
    std::size_t warm = 0;
    for (const auto& y : a1) {
        EXPECT_LE(norm2(y), 1.0 + 1e-12);
        if (norm2(inst.B() * y) <= inst.c() / inst.S()) ++warm;
    }
    EXPECT_EQ(warm, 5u);
    EXPECT_THROW(generate_context(polytope_instance(), 1), ConfigError);
}

TEST(Environment, BoxGridOrderAndSize) {
    const BoxGrid g(BoxPolytope{Vec{-1.0, -2.0}, Vec{1.0, 2.0}, 5});
    const auto& pts = g.points();
    ASSERT_EQ(pts.size(), 25u);
    EXPECT_EQ(pts[0], (Vec{-1.0, -2.0}));
    EXPECT_EQ(pts[1], (Vec{-1.0, -1.0}));  // second coordinate varies fastest
    EXPECT_EQ(pts[5], (Vec{-0.5, -2.0}));
    EXPECT_EQ(pts[24], (Vec{1.0, 2.0}));
    EXPECT_EQ(pts[12], (Vec{0.0, 0.0}));
}
