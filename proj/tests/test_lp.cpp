#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "safeban/errors.hpp"
#include "safeban/linalg.hpp"
#include "safeban/lp.hpp"
#include "safeban/random.hpp"
#include "oracles.hpp"

using namespace safeban;

using safeban::testing::bfs_oracle;
using safeban::testing::random_lp;

TEST(Lp, MatchesBasicSolutionEnumeration) {
    RandomStream rng(31);
    int solved = 0, infeasible = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const LpProblem p = random_lp(rng, 4, 1 + rng.index(5));
        const auto oracle = bfs_oracle(p);
        const LpResult r = lp_solve(p);
        if (!oracle) {
            EXPECT_EQ(r.status, LpStatus::infeasible) << "trial " << trial;
            ++infeasible;
            continue;
        }
        ASSERT_EQ(r.status, LpStatus::optimal) << "trial " << trial;
        EXPECT_NEAR(r.value, *oracle, 1e-7) << "trial " << trial;
        // the returned point is feasible
        for (const auto& c : p.inequalities) {
            double s = 0.0;
            for (std::size_t j = 0; j < 4; ++j) s += c.row[j] * r.x[j];
            EXPECT_LE(s, c.rhs + 1e-7);
        }
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_GE(r.x[j], p.bounds[j].lo - 1e-7);
            EXPECT_LE(r.x[j], p.bounds[j].hi + 1e-7);
        }
        ++solved;
    }
    EXPECT_GT(solved, 50);
}

TEST(Lp, TextbookProblem) {
    // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), value 36
    LpProblem p;
    p.objective = {-3.0, -5.0};
    p.inequalities = {{{1.0, 0.0}, 4.0}, {{0.0, 2.0}, 12.0}, {{3.0, 2.0}, 18.0}};
    const auto r = lp_solve(p);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.value, -36.0, 1e-12);
    EXPECT_NEAR(r.x[0], 2.0, 1e-12);
    EXPECT_NEAR(r.x[1], 6.0, 1e-12);
}

TEST(Lp, DetectsInfeasibleAndUnbounded) {
    LpProblem inf;
    inf.objective = {1.0};
    inf.inequalities = {{{1.0}, -1.0}};  // x ≤ -1 with x ≥ 0
    EXPECT_EQ(lp_solve(inf).status, LpStatus::infeasible);

    LpProblem unb;
    unb.objective = {-1.0, 0.0};
    unb.inequalities = {{{-1.0, 1.0}, 1.0}};
    EXPECT_EQ(lp_solve(unb).status, LpStatus::unbounded);

    LpProblem crossed;
    crossed.objective = {1.0};
    crossed.bounds = {{2.0, 1.0}};
    EXPECT_EQ(lp_solve(crossed).status, LpStatus::infeasible);
}

TEST(Lp, NegativeRightHandSidesAndFreeVariables) {
    // min x + 2y, x + y ≥ 1 (as -x - y ≤ -1), x ≥ -5 as a row, y ≤ 3 as a bound
    LpProblem p;
    p.objective = {1.0, 2.0};
    p.bounds = {{-kLpInf, kLpInf}, {-kLpInf, 3.0}};
    p.inequalities = {{{-1.0, -1.0}, -1.0}, {{-1.0, 0.0}, 5.0}};
    // x = 1 - y makes the cost 1 + y, unbounded below while y is
    EXPECT_EQ(lp_solve(p).status, LpStatus::unbounded);
    LpProblem q = p;
    q.bounds[1] = {-1.0, 3.0};
    const auto r2 = lp_solve(q);
    ASSERT_EQ(r2.status, LpStatus::optimal);
    EXPECT_NEAR(r2.value, 0.0, 1e-12);  // y = -1, x = 2
    EXPECT_NEAR(r2.x[0], 2.0, 1e-12);
    EXPECT_NEAR(r2.x[1], -1.0, 1e-12);
}

TEST(Lp, DegenerateProblemTerminates) {
    // Klee-Minty-like degenerate vertex at the origin
    LpProblem p;
    p.objective = {-0.75, 150.0, -0.02, 6.0};
    p.inequalities = {{{0.25, -60.0, -0.04, 9.0}, 0.0}, {{0.5, -90.0, -0.02, 3.0}, 0.0}, {{0.0, 0.0, 1.0, 0.0}, 1.0}};
    const auto r = lp_solve(p);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.value, -0.05, 1e-9);
}

TEST(Lp, RejectsBadShapes) {
    LpProblem p;
    EXPECT_THROW(lp_solve(p), std::invalid_argument);
    p.objective = {1.0, 1.0};
    p.inequalities = {{{1.0}, 1.0}};
    EXPECT_THROW(lp_solve(p), std::invalid_argument);
}
