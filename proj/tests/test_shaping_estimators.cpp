#include <gtest/gtest.h>

#include "drro/rng.hpp"
#include "drro/shaping_estimators.hpp"
#include "oracles.hpp"

using namespace drro;

TEST(Snis, Examples) {
    const std::vector<SnisSample> same(3, SnisSample{1.0, 0.2, 0.3});
    for (double w : snis_weights(same, 1.0, 1.0)) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);

    const std::vector<SnisSample> two{{1.0, 0.5, 0.5}, {0.0, 0.5, 0.5}};
    const auto w = snis_weights(two, 0.0, 1.0);
    EXPECT_NEAR(w[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-12);
    EXPECT_NEAR(w[1], 1.0 / (std::exp(1.0) + 1.0), 1e-12);

    const std::vector<double> c(3, 2.5);
    EXPECT_NEAR(snis_estimate(same, c, 0.3, 0.7), 2.5, 1e-15);
}

TEST(Snis, FullEnumerationIdentity) {
    const std::vector<double> r{4, 3, 2, 1};
    std::vector<SnisSample> s;
    for (double x : r) s.push_back({x, 0.25, 0.25});
    EXPECT_NEAR(snis_estimate(s, std::vector<double>{1, 0, 0, 0}, 0.0, 1.0), std::exp(4.0) / (std::exp(4.0) + std::exp(3.0) + std::exp(2.0) + std::exp(1.0)), 1e-12);
    EXPECT_NEAR(std::exp(4.0) / (std::exp(4.0) + std::exp(3.0) + std::exp(2.0) + std::exp(1.0)), 0.6439, 1e-4);

    oracle::Draw d(31);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = d.integer(1, 8);
        const auto rv = d.normals(n, 2.0);
        const auto pi = d.simplex(n);
        const auto h = d.normals(n);
        const double delta = d.uniform(0, 3), tau = d.uniform(0.1, 4), q = d.uniform(0.01, 1);
        std::vector<SnisSample> samples;
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) {
            samples.push_back({rv[i], q, pi[i]});
            z[i] = (rv[i] - delta * pi[i]) / tau;
        }
        EXPECT_NEAR(snis_estimate(samples, h, delta, tau), oracle::inner(oracle::softmax(z), h), 1e-10);
    }
}

TEST(Snis, Invariances) {
    oracle::Draw d(37);
    std::vector<SnisSample> s, shifted, scaled;
    for (int k = 0; k < 6; ++k) {
        const SnisSample x{d.normal(), d.uniform(0.05, 0.5), d.uniform(0, 1)};
        s.push_back(x);
        shifted.push_back({x.reward + 3.7, x.proposal_prob, x.policy_prob});
        scaled.push_back({x.reward, x.proposal_prob * 0.1, x.policy_prob});
    }
    const auto a = snis_weights(s, 0.8, 1.3), b = snis_weights(shifted, 0.8, 1.3), c = snis_weights(scaled, 0.8, 1.3);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_NEAR(a[k], b[k], 1e-12);
        EXPECT_NEAR(a[k], c[k], 1e-12);
    }
}

TEST(Snis, MonteCarloConvergesOnReferenceInstance) {
    const std::vector<double> r{4, 3, 2, 1};
    Rng rng(5);
    const std::size_t K = 100000;
    std::vector<SnisSample> s(K);
    std::vector<double> h(K);
    const std::vector<double> q(4, 0.25);
    for (std::size_t k = 0; k < K; ++k) {
        const auto y = rng.categorical(q);
        s[k] = {r[y], 0.25, 0.25};
        h[k] = y == 0 ? 1.0 : 0.0;
    }
    EXPECT_NEAR(snis_estimate(s, h, 0.0, 1.0), 0.6439, 0.01);
}

TEST(Snis, Errors) {
    EXPECT_THROW(snis_weights({}, 0.0, 1.0), std::invalid_argument);
    const std::vector<SnisSample> s{{1.0, 0.5, 0.5}};
    EXPECT_THROW(snis_weights(s, 0.0, 0.0), std::invalid_argument);
    const std::vector<SnisSample> z{{1.0, 0.0, 0.5}};
    EXPECT_THROW(snis_weights(z, 0.0, 1.0), std::invalid_argument);
}

TEST(SnisBound, Examples) {
    const double eta = 0.05;
    const auto b = snis_error_bound(2.0, 1.5, 2.0, 1, eta);
    const auto at = snis_error_bound(2.0, 1.5, 2.0, b.k_min, eta);
    EXPECT_NEAR(at.bound, 4.0 * 1.5 * std::sqrt(std::log(4.0 / eta) / (2.0 * static_cast<double>(b.k_min))), 1e-12);
    EXPECT_EQ(b.k_min, static_cast<std::uint64_t>(std::ceil(2.0 * std::log(4.0 / eta))));

    EXPECT_NEAR(snis_error_bound(1, 1, 1, 100, 4.0 / std::exp(2.0)).bound, 0.4, 1e-12);
    EXPECT_NEAR(snis_error_bound(1, 1, 1, 200, 0.1).bound / snis_error_bound(1, 1, 1, 100, 0.1).bound, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_THROW(snis_error_bound(1, 1, 1, 10, 1.0), std::invalid_argument);
    EXPECT_THROW(snis_error_bound(1, 1, 1, 10, 0.0), std::invalid_argument);
}

TEST(GroupNormalize, Examples) {
    const std::vector<double> half{0.5, 0.5};
    EXPECT_EQ(group_normalize(half), half);
    const std::vector<double> tiny{1e-30, 3e-30};
    const auto t = group_normalize(tiny);
    EXPECT_NEAR(t[0], 0.25, 1e-15);
    EXPECT_NEAR(t[1], 0.75, 1e-15);
    const std::vector<double> u(7, 0.01);
    for (double v : group_normalize(u)) EXPECT_NEAR(v, 1.0 / 7.0, 1e-15);
    const std::vector<double> logs{-800.0, -800.0 + std::log(3.0)};
    const auto l = group_normalize_log(logs);
    EXPECT_NEAR(l[0], 0.25, 1e-12);
    EXPECT_NEAR(l[0] + l[1], 1.0, 1e-12);
    EXPECT_THROW(group_normalize(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST(ScaledBudget, Examples) {
    EXPECT_DOUBLE_EQ(scaled_budget(100, 16, 64), 25.0);
    EXPECT_DOUBLE_EQ(scaled_budget(7.5, 9, 9), 7.5);
    EXPECT_DOUBLE_EQ(scaled_budget(0, 4, 8), 0.0);
    EXPECT_THROW(scaled_budget(1, 9, 8), std::invalid_argument);
}

TEST(K3, Examples) {
    const std::vector<double> a{-1.0, -2.0, -0.5};
    EXPECT_EQ(k3_kl(a, a), 0.0);
    const std::vector<double> ref{0.0, 0.0}, roll{-1.0, -1.0};
    EXPECT_NEAR(k3_kl(ref, roll), std::exp(1.0) - 2.0, 1e-15);
    oracle::Draw d(41);
    for (int t = 0; t < 10000; ++t) EXPECT_GE(k3_term(d.normal(5), d.normal(5)), 0.0);
}

TEST(K3, TwoPointConsistency) {
    const std::vector<double> pi{0.8, 0.2}, ref{0.5, 0.5};
    const double exact = oracle::kl(pi, ref);
    EXPECT_NEAR(exact, 0.19274, 1e-5);
    Rng rng(3);
    const std::size_t K = 100000;
    std::vector<double> lr(K), lp(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto y = rng.categorical(pi);
        lr[k] = std::log(ref[y]);
        lp[k] = std::log(pi[y]);
    }
    EXPECT_NEAR(k3_kl(lr, lp), exact, 0.02 * exact);
}

TEST(DynamicBudget, Examples) {
    BudgetConfig c;
    c.mode = BudgetMode::dynamic;
    c.base = 40;
    c.alpha = 0;
    EXPECT_DOUBLE_EQ(dynamic_budget(c, 3.0), 40.0);
    c.base = 0;
    c.alpha = 10;
    EXPECT_DOUBLE_EQ(dynamic_budget(c, 0.5), 5.0);
    c.base = 2;
    EXPECT_DOUBLE_EQ(dynamic_budget(c, 0.0), 2.0);
    c.mode = BudgetMode::fixed;
    EXPECT_DOUBLE_EQ(dynamic_budget(c, 0.5), 2.0);
    EXPECT_THROW(dynamic_budget(c, -0.1), std::invalid_argument);
}

TEST(KlSmoother, WindowMean) {
    KlSmoother s(3);
    EXPECT_DOUBLE_EQ(s.value(), 0.0);
    EXPECT_DOUBLE_EQ(s.push(3), 3.0);
    EXPECT_DOUBLE_EQ(s.push(6), 4.5);
    EXPECT_DOUBLE_EQ(s.push(0), 3.0);
    EXPECT_DOUBLE_EQ(s.push(9), 5.0);
}

TEST(DvBound, Examples) {
    const PolicyVector pi{0.2, 0.3, 0.5};
    const std::vector<double> c(3, 1.7);
    const auto tight = dv_bound(pi, pi, c, 0.9);
    EXPECT_NEAR(tight.lhs, 1.7, 1e-12);
    EXPECT_NEAR(tight.rhs, 1.7, 1e-12);
    const PolicyVector pi0{0.5, 0.25, 0.25};
    const auto zero = dv_bound(pi, pi0, std::vector<double>(3, 0.0), 2.0);
    EXPECT_EQ(zero.lhs, 0.0);
    EXPECT_NEAR(zero.rhs, oracle::kl(pi.probs(), pi0.probs()) / 2.0, 1e-12);
}

TEST(DvBound, RandomDraws) {
    oracle::Draw d(43);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = d.integer(1, 8);
        const PolicyVector pi(d.simplex(n), 1e-9), pi0(d.simplex(n), 1e-9);
        std::vector<double> h(n);
        for (double& x : h) x = d.uniform(0, 5);
        const auto b = dv_bound(pi, pi0, h, d.uniform(0.01, 5));
        EXPECT_LE(b.lhs, b.rhs + 1e-12);
    }
}
