#include <gtest/gtest.h>

#include "drro/dro_baseline.hpp"
#include "oracles.hpp"

using namespace drro;

namespace {
const RewardVector kR{4, 3, 2, 1};
}

TEST(DroValue, Examples) {
    EXPECT_DOUBLE_EQ(dro_worst_case_value(PolicyVector::vertex(4, 0), kR, 2.0), 2.0);
    const PolicyVector pi{0.1, 0.2, 0.3, 0.4};
    EXPECT_DOUBLE_EQ(dro_worst_case_value(pi, kR, 0.0), oracle::inner(pi.probs(), kR.values()));
    EXPECT_DOUBLE_EQ(dro_worst_case_value(PolicyVector{0.5, 0.5, 0, 0}, kR, 2.0), 2.5);
}

TEST(SolveDro, Examples) {
    const auto s = solve_dro(kR, 2.0);
    EXPECT_EQ(s.support_size, 2u);
    EXPECT_NEAR(s.objective, 2.5, 1e-15);
    EXPECT_EQ(s.policy, (PolicyVector{0.5, 0.5, 0, 0}));
    ASSERT_EQ(s.prefix_values.size(), 4u);
    EXPECT_NEAR(s.prefix_values[0], 2.0, 1e-15);
    EXPECT_NEAR(s.prefix_values[1], 2.5, 1e-15);
    EXPECT_NEAR(s.prefix_values[2], 7.0 / 3.0, 1e-15);
    EXPECT_NEAR(s.prefix_values[3], 2.0, 1e-15);

    const auto g = solve_dro(kR, 0.0);
    EXPECT_EQ(g.support_size, 1u);
    EXPECT_EQ(g.policy, PolicyVector::vertex(4, 0));

    const auto c = solve_dro(RewardVector{1.5, 1.5, 1.5}, 0.9);
    EXPECT_EQ(c.support_size, 3u);
    EXPECT_NEAR(c.objective, 1.5 - 0.3, 1e-15);
}

TEST(SolveDro, TieChoosesSmallestPrefix) {
    // A_1 - d/1 = 3 - 1 = 2 and A_2 - d/2 = 2.5 - 0.5 = 2 tie
    EXPECT_EQ(solve_dro(RewardVector{3, 2}, 1.0).support_size, 1u);
}

TEST(SolveDro, MatchesLatticeBruteForce) {
    oracle::Draw d(23);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = d.integer(2, 4);
        const RewardVector r(d.normals(n));
        const double delta = d.uniform(0, 3);
        const int res = 60;
        double best = -1e300;
        std::function<void(std::vector<int>&, std::size_t, int)> rec = [&](std::vector<int>& c, std::size_t i, int left) {
            if (i + 1 == n) {
                c[i] = left;
                std::vector<double> p(n);
                double mx = 0.0;
                for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, p[j] = static_cast<double>(c[j]) / res);
                best = std::max(best, oracle::inner(p, r.values()) - delta * mx);
                return;
            }
            for (int k = 0; k <= left; ++k) {
                c[i] = k;
                rec(c, i + 1, left - k);
            }
        };
        std::vector<int> c(n);
        rec(c, 0, res);
        const auto s = solve_dro(r, delta);
        EXPECT_GE(s.objective, best - 1e-12);
        EXPECT_NEAR(s.objective, dro_worst_case_value(s.policy, r, delta), 1e-12);
        // lattice contains every prefix-uniform policy when res is divisible by 1..4
        EXPECT_NEAR(s.objective, best, 1e-12);
    }
}

TEST(Dominance, Examples) {
    const auto a = dominance_check(kR, 2.0, MonotoneTransform(IdentityTransform{}));
    EXPECT_NEAR(a.drro_true_value, 3.75, 1e-12);
    EXPECT_NEAR(a.dro_true_value, 3.5, 1e-12);
    EXPECT_TRUE(a.prefix_dominance);

    const auto b = dominance_check(kR, 2.0, MonotoneTransform(AffineTransform{2.0, 5.0}));
    EXPECT_NEAR(b.drro_true_value, 12.5, 1e-12);
    EXPECT_NEAR(b.dro_true_value, 12.0, 1e-12);
    EXPECT_TRUE(b.prefix_dominance);

    const auto c = dominance_check(kR, 1e-12, MonotoneTransform(IdentityTransform{}));
    EXPECT_NEAR(c.drro_true_value, c.dro_true_value, 1e-9);
    EXPECT_TRUE(c.prefix_dominance);
}

TEST(Dominance, Errors) {
    EXPECT_THROW(dominance_check(RewardVector{1, 1, 0}, 1.0, MonotoneTransform{}), std::invalid_argument);
    EXPECT_THROW(dominance_check(kR, 0.0, MonotoneTransform{}), std::invalid_argument);
}

TEST(Dominance, RandomInstancesAllTransforms) {
    oracle::Draw d(29);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = d.integer(2, 10);
        const RewardVector r(d.normals(n, 2.0));
        const double lo = *std::min_element(r.begin(), r.end());
        const double delta = d.uniform(0.01, 10);
        std::vector<MonotoneTransform> phis{MonotoneTransform(IdentityTransform{}),
                                            MonotoneTransform(AffineTransform{d.uniform(0.1, 3), d.normal()}),
                                            MonotoneTransform(PowerTransform{d.uniform(0.2, 4), lo - 1.0})};
        for (const auto& phi : phis) {
            const auto res = dominance_check(r, delta, phi);
            EXPECT_GE(res.drro_true_value - res.dro_true_value, -1e-12);
            EXPECT_TRUE(res.prefix_dominance);
            EXPECT_GE(res.dro_support, res.drro_support);
        }
    }
}

TEST(Dominance, SignFlippedSolverIsCaught) {
    // A mutant that hedges toward the lowest rewards instead of the highest.
    const DrroSolver mutant = [](const RewardVector& r, AmbiguityBudget delta) {
        std::vector<double> neg(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) neg[i] = -r[i];
        return solve_water_filling(RewardVector(neg), delta);
    };
    const auto res = dominance_check(kR, 2.0, MonotoneTransform{}, 1e-12, mutant);
    EXPECT_FALSE(res.prefix_dominance);
    EXPECT_LT(res.drro_true_value, res.dro_true_value);
}

TEST(MonotoneTransform, Validation) {
    EXPECT_THROW(MonotoneTransform(AffineTransform{-1.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(MonotoneTransform(PowerTransform{0.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(MonotoneTransform(TabulatedTransform{{0, 1}, {1, 0}}), std::invalid_argument);
    const MonotoneTransform t(TabulatedTransform{{0, 1, 2}, {0, 10, 11}});
    EXPECT_DOUBLE_EQ(t(0.5), 5.0);
    EXPECT_DOUBLE_EQ(t(3.0), 12.0);
    EXPECT_DOUBLE_EQ(t(-1.0), -10.0);
}
