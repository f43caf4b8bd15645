#include <gtest/gtest.h>

#include "drro/robust_simplex.hpp"
#include "oracles.hpp"

using namespace drro;

namespace {

const RewardVector kR{4, 3, 2, 1};

void expect_policy(const PolicyVector& p, std::vector<double> want, double tol = 1e-12) {
    ASSERT_EQ(p.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(p[i], want[i], tol) << "entry " << i;
}

}  // namespace

TEST(Regret, Examples) {
    EXPECT_DOUBLE_EQ(regret(PolicyVector::vertex(4, 0), kR), 0.0);
    EXPECT_DOUBLE_EQ(regret(PolicyVector{0.5, 0.5}, RewardVector{1, 0}), 0.5);
    EXPECT_DOUBLE_EQ(regret(PolicyVector{0.75, 0.25, 0, 0}, kR), 0.25);
    EXPECT_THROW(regret(PolicyVector{0.5, 0.5}, kR), DimensionError);
}

TEST(WorstCaseRegret, Examples) {
    const auto a = worst_case_regret(PolicyVector{0.75, 0.25, 0, 0}, kR, 2.0);
    EXPECT_NEAR(a.value, 0.75, 1e-15);
    // r - delta pi = (2.5, 2.5, 2, 1): tie between the first two, lowest index wins
    EXPECT_EQ(a.adversary_index, 0u);

    const PolicyVector pi{0.1, 0.2, 0.3, 0.4};
    EXPECT_NEAR(worst_case_regret(pi, kR, 0.0).value, 4.0 - oracle::inner(pi.probs(), kR.values()), 1e-15);

    EXPECT_NEAR(worst_case_regret(PolicyVector::uniform(2), RewardVector{1, 0}, 1.0).value, 1.0, 1e-15);
}

TEST(WorstCaseRegret, AdversaryAttainsValueAndMatchesEnumeration) {
    oracle::Draw d(7);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = d.integer(1, 7);
        const auto r = d.normals(n, 2.0);
        const auto pi = d.simplex(n);
        const double delta = d.uniform(0.0, 3.0);
        const auto got = worst_case_regret(PolicyVector(pi, 1e-9), RewardVector(r), delta);
        const auto want = oracle::enumerate_adversaries(pi, r, delta);
        EXPECT_NEAR(got.value, want.value, 1e-12);
        auto s = r;
        s[got.adversary_index] += delta;
        EXPECT_NEAR(oracle::vertex_regret(pi, s), got.value, 1e-12);
    }
}

TEST(WorstCaseRegret, DeltaGridCrossCheck) {
    // Uniform policy on two responses: every perturbation with |d1| + |d2| <= 1 on a 1e-3 grid.
    const std::vector<double> pi{0.5, 0.5};
    double best = -1e300;
    for (int i = -1000; i <= 1000; ++i) {
        const double d1 = i * 1e-3;
        const double rest = 1.0 - std::abs(d1);
        for (double d2 : {rest, -rest}) best = std::max(best, oracle::vertex_regret(pi, {1.0 + d1, 0.0 + d2}));
    }
    EXPECT_NEAR(best, 1.0, 1e-9);
}

TEST(HardUtility, Examples) {
    EXPECT_NEAR(hard_utility(PolicyVector{0.75, 0.25, 0, 0}, kR, 2.0), 1.25, 1e-15);
    const PolicyVector pi{0.1, 0.2, 0.3, 0.4};
    EXPECT_NEAR(hard_utility(pi, kR, 0.0), oracle::inner(pi.probs(), kR.values()) - 4.0, 1e-15);
    EXPECT_NEAR(hard_utility(PolicyVector{0.5, 0.5}, RewardVector{1, 1}, 2.0), 1.0, 1e-15);
}

TEST(HardUtility, IdentityWithWorstCaseRegret) {
    oracle::Draw d(11);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = d.integer(1, 6);
        const PolicyVector pi(d.simplex(n), 1e-9);
        const RewardVector r(d.normals(n));
        const double delta = d.uniform(0, 2);
        EXPECT_NEAR(hard_utility(pi, r, delta), -worst_case_regret(pi, r, delta).value + delta, 1e-12);
    }
}

TEST(SoftUtility, Examples) {
    EXPECT_NEAR(soft_utility(PolicyVector{1.0}, RewardVector{3.0}, 2.0, 0.7), 3.0 - (3.0 - 2.0), 1e-12);
    EXPECT_NEAR(soft_utility(PolicyVector{0.75, 0.25, 0, 0}, kR, 2.0, 1e-6), 1.25, 1e-4);
}

TEST(SoftUtility, NoOverflowForLargeRewards) {
    const double v = soft_utility(PolicyVector::uniform(3), RewardVector{1e4, 1e4 - 1, 0}, 1.0, 1e-3);
    EXPECT_TRUE(std::isfinite(v));
}

TEST(SoftUtility, Sandwich) {
    oracle::Draw d(13);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = d.integer(1, 9);
        const PolicyVector pi(d.simplex(n), 1e-9);
        const RewardVector r(d.normals(n, 2.0));
        const double delta = d.uniform(0, 3), tau = d.uniform(0.01, 5);
        const double gap = hard_utility(pi, r, delta) - soft_utility(pi, r, delta, tau);
        EXPECT_GE(gap, -1e-9);
        EXPECT_LE(gap, tau * std::log(static_cast<double>(n)) + 1e-9);
    }
}

TEST(WaterFilling, ReferenceInstance) {
    const auto s = solve_water_filling(kR, 2.0);
    EXPECT_NEAR(s.t0, 2.5, 1e-12);
    EXPECT_NEAR(s.t_star, 2.5, 1e-12);
    expect_policy(s.policy, {0.75, 0.25, 0, 0});
    EXPECT_NEAR(s.worst_case_regret, 0.75, 1e-12);
    EXPECT_NEAR(oracle::lattice_min_regret(kR.values(), 2.0, 400), 0.75, 0.02);
}

TEST(WaterFilling, LargeBudgetClosedForm) {
    const auto s = solve_water_filling(kR, 8.0);
    expect_policy(s.policy, {0.4375, 0.3125, 0.1875, 0.0625});
}

TEST(WaterFilling, ConstantRewardsGiveUniform) {
    for (double delta : {0.1, 1.0, 50.0}) expect_policy(solve_water_filling(RewardVector{2, 2, 2, 2, 2}, delta).policy, {0.2, 0.2, 0.2, 0.2, 0.2});
}

TEST(WaterFilling, RejectsZeroBudget) { EXPECT_THROW(solve_water_filling(kR, 0.0), std::invalid_argument); }

TEST(WaterFilling, InvariantsOnRandomInstances) {
    oracle::Draw d(17);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = d.integer(1, 10);
        auto rv = d.normals(n, 2.0);
        if (t % 5 == 0 && n > 2) rv[1] = rv[0];  // exercise ties
        const RewardVector r(rv);
        const double delta = d.uniform(1e-3, 10.0);
        const auto s = solve_water_filling(r, delta);
        EXPECT_GE(s.t_star, s.t0 - 1e-12);
        double u = -1e300;
        for (std::size_t i = 0; i < n; ++i) u = std::max(u, r[i] - delta * s.policy[i]);
        EXPECT_NEAR(u, s.t_star, 1e-9);
        EXPECT_NEAR(s.worst_case_regret, delta + s.uncovered_max - oracle::inner(s.policy.probs(), rv), 1e-10);
        // leftover mass sits on the top response of the sorted order
        const Index top = s.sort_permutation[0];
        for (std::size_t i = 0; i < n; ++i) EXPECT_GE(s.policy[top], s.policy[i] - 1e-12);
        // sorted-order formula
        for (std::size_t k = 1; k < n; ++k) {
            const Index i = s.sort_permutation[k];
            EXPECT_NEAR(s.policy[i], std::max(0.0, r[i] - s.t_star) / delta, 1e-10);
        }
        // the water level solves sum (r - t)_+ = delta
        double mass = 0.0;
        for (double x : rv) mass += std::max(0.0, x - s.t0);
        EXPECT_NEAR(mass, delta, 1e-9 * (1.0 + delta));
    }
}

TEST(WaterFilling, SortPermutationIsStable) {
    const auto s = solve_water_filling(RewardVector{1, 3, 3, 2}, 0.5);
    EXPECT_EQ(s.sort_permutation, (std::vector<Index>{1, 2, 3, 0}));
}

TEST(Greedy, Examples) {
    expect_policy(greedy_policy(kR), {1, 0, 0, 0});
    expect_policy(greedy_policy(RewardVector{1, 1}), {1, 0});
    const auto s = solve_water_filling(kR, 1e-9);
    double l1 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) l1 += std::abs(s.policy[i] - (i == 0 ? 1.0 : 0.0));
    EXPECT_LE(l1, 1e-6);
}

TEST(LpRegret, P1EqualsL1Closed) {
    oracle::Draw d(19);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = d.integer(2, 6);
        const PolicyVector pi(d.simplex(n), 1e-9);
        const RewardVector r(d.normals(n));
        const double delta = d.uniform(0, 2);
        EXPECT_NEAR(lp_robust_regret(pi, r, delta, 1.0), worst_case_regret(pi, r, delta).value, 1e-12);
    }
}

TEST(LpRegret, InfinityDoublesBudget) {
    EXPECT_NEAR(lp_robust_regret(PolicyVector{0.75, 0.25, 0, 0}, kR, 1.0, INFINITY), 0.75, 1e-12);
}

TEST(LpRegret, TwoNormNonLocality) {
    const PolicyVector a{0.5, 0.5, 0.0};
    const PolicyVector b{0.5, 0.25, 0.25};
    EXPECT_NEAR(vertex_bonus_factor(a, 0, 2.0), std::sqrt(2.0) * 0.5, 1e-12);
    EXPECT_NEAR(vertex_bonus_factor(b, 0, 2.0), 0.5 * std::sqrt(1.0 + 0.5), 1e-12);
}

TEST(BruteForce, Examples) {
    const auto b = brute_force_drro(kR, 2.0, 400);
    EXPECT_NEAR(b.value, 0.75, 0.02);
    const auto z = brute_force_drro(kR, 0.0, 50);
    EXPECT_NEAR(z.value, 0.0, 1e-12);
    EXPECT_NEAR(z.policy[0], 1.0, 1e-12);
    const RewardVector r2{1, 0};
    EXPECT_NEAR(brute_force_drro(r2, 0.5, 400).value, solve_water_filling(r2, 0.5).worst_case_regret, 0.01);
    EXPECT_THROW(brute_force_drro(RewardVector{1, 2, 3, 4, 5, 6, 7}, 1.0, 50), std::invalid_argument);
}

TEST(Types, Validation) {
    EXPECT_THROW(RewardVector(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW((RewardVector{1.0, NAN}), std::invalid_argument);
    EXPECT_THROW((PolicyVector{0.5, 0.6}), std::invalid_argument);
    EXPECT_THROW((PolicyVector{1.5, -0.5}), std::invalid_argument);
    EXPECT_THROW(AmbiguityBudget{-1.0}, std::invalid_argument);
    EXPECT_THROW(AmbiguityBudget{INFINITY}, std::invalid_argument);
}
