#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "safeban/random.hpp"

using namespace safeban;

TEST(Random, StreamIsPureFunctionOfKeyAndCounter) {
    RandomStream a(42), b(42);
    for (int i = 1; i <= 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        EXPECT_EQ(x, splitmix64_mix(42 + static_cast<std::uint64_t>(i) * kGoldenGamma));
    }
}

TEST(Random, SplitMixReferenceValue) {
    // First output of the reference SplitMix64 generator seeded with 0.
    EXPECT_EQ(RandomStream(0).next_u64(), 0xE220A8397B1DCDAFULL);
}

TEST(Random, DerivedKeysAreDistinct) {
    std::set<std::uint64_t> keys;
    for (std::uint64_t p = 0; p < 5; ++p)
        for (std::uint64_t r = 0; r < 200; ++r) keys.insert(derive_key(1, p, r));
    EXPECT_EQ(keys.size(), 1000u);
    EXPECT_NE(derive_key(1, 2, 3), derive_key(1, 3, 2));
}

TEST(Random, UniformMoments) {
    RandomStream rng(7);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    EXPECT_NEAR(s / n, 0.5, 0.005);
    EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 0.002);
}

TEST(Random, NormalMoments) {
    RandomStream rng(8);
    const int n = 200000;
    double s = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
    EXPECT_NEAR(s4 / n, 3.0, 0.1);
}

TEST(Random, SphereAndBall) {
    RandomStream rng(9);
    const std::size_t d = 4;
    double mean_r4 = 0;
    for (int i = 0; i < 20000; ++i) {
        EXPECT_NEAR(norm2(rng.on_unit_sphere(d)), 1.0, 1e-12);
        const double r = norm2(rng.in_unit_ball(d));
        ASSERT_LE(r, 1.0 + 1e-12);
        mean_r4 += std::pow(r, static_cast<double>(d));
    }
    // r^d is uniform on [0,1] for the uniform ball
    EXPECT_NEAR(mean_r4 / 20000, 0.5, 0.01);
}

TEST(Random, IndexInRange) {
    RandomStream rng(10);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto k = rng.index(7);
        ASSERT_LT(k, 7u);
        ++hits[k];
    }
    for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}
