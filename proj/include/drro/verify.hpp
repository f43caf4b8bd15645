#pragma once

/// Randomized oracle and invariant suites behind the `verify` command.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "drro/coverage_analysis.hpp"
#include "drro/dro_baseline.hpp"
#include "drro/policy_optimizer.hpp"
#include "drro/robust_simplex.hpp"
#include "drro/rng.hpp"
#include "drro/shaping_estimators.hpp"

namespace drro {

struct SuiteReport {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double max_violation = 0.0;  ///< largest amount by which a checked inequality or identity was missed
    double tolerance = 0.0;

    bool passed() const { return failures == 0; }

    /// Record one check whose violation is `v` (<= tolerance means pass).
    void check(double v) {
        ++cases;
        if (!(v <= tolerance)) ++failures;
        if (std::isnan(v) || v > max_violation) max_violation = std::isnan(v) ? INFINITY : v;
    }
    void check_bool(bool ok) { check(ok ? 0.0 : INFINITY); }
};

struct VerifyOptions {
    std::uint64_t seed = 20240601;
    DrroSolver solver = solve_water_filling;
};

namespace detail {

inline std::vector<double> random_rewards(Rng& rng, std::size_t n, double scale = 2.0) {
    std::vector<double> r(n);
    for (double& v : r) v = scale * rng.normal();
    return r;
}

inline PolicyVector random_policy(Rng& rng, std::size_t n) {
    std::vector<double> p(n);
    double total = 0.0;
    for (double& v : p) total += v = -std::log(1.0 - rng.uniform());
    for (double& v : p) v /= total;
    return PolicyVector(std::move(p), 1e-9);
}

inline double spread(std::span<const double> r) {
    return *std::max_element(r.begin(), r.end()) - *std::min_element(r.begin(), r.end());
}

}  // namespace detail

inline SuiteReport verify_water_filling(const VerifyOptions& o, std::size_t trials = 60) {
    SuiteReport rep{"water-filling", 0, 0, 0.0, 0.02};
    Rng rng = Rng(o.seed).split("water-filling");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(3);
        const RewardVector r(detail::random_rewards(rng, n));
        const double delta = std::max(1e-3, 2.0 * detail::spread(r.span()) * rng.uniform());
        const auto sol = o.solver(r, delta);
        const auto brute = brute_force_drro(r, delta, n <= 3 ? 400 : 150);
        rep.check(sol.worst_case_regret - brute.value);
    }
    return rep;
}

inline SuiteReport verify_adversary(const VerifyOptions& o, std::size_t trials = 1000) {
    SuiteReport rep{"adversary", 0, 0, 0.0, 1e-12};
    Rng rng = Rng(o.seed).split("adversary");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(7);
        const RewardVector r(detail::random_rewards(rng, n));
        const auto pi = detail::random_policy(rng, n);
        const double delta = 3.0 * rng.uniform();
        // max over single-coordinate adversaries r + delta e_k, compared with the closed form
        double best = -INFINITY;
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<double> s(r.values());
            s[k] += delta;
            best = std::max(best, regret(pi, RewardVector(s)));
        }
        rep.check(std::abs(best - worst_case_regret(pi, r, delta).value) / (1.0 + std::abs(best)));
    }
    return rep;
}

inline SuiteReport verify_sandwich(const VerifyOptions& o, std::size_t trials = 1000) {
    SuiteReport rep{"sandwich", 0, 0, 0.0, 1e-9};
    Rng rng = Rng(o.seed).split("sandwich");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(9);
        const RewardVector r(detail::random_rewards(rng, n));
        const auto pi = detail::random_policy(rng, n);
        const double delta = 3.0 * rng.uniform();
        const double tau = 0.05 + 5.0 * rng.uniform();
        const double gap = hard_utility(pi, r, delta) - soft_utility(pi, r, delta, tau);
        rep.check(std::max(-gap, gap - tau * std::log(static_cast<double>(n))));
    }
    return rep;
}

inline SuiteReport verify_gradients(const VerifyOptions& o, std::size_t trials = 100) {
    SuiteReport rep{"gradients", 0, 0, 0.0, 1e-5};
    Rng rng = Rng(o.seed).split("gradients");
    const double h = 1e-5;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(5);
        std::vector<double> logits = detail::random_rewards(rng, n, 1.0);
        const RewardVector r(detail::random_rewards(rng, n));
        const double delta = 2.0 * rng.uniform();
        const double tau = 0.5 + 2.0 * rng.uniform();
        const TabularSoftmaxPolicy policy(1, n, logits);
        auto fd = [&](auto&& f) {
            std::vector<double> g(n);
            for (std::size_t i = 0; i < n; ++i) {
                auto up = logits, dn = logits;
                up[i] += h;
                dn[i] -= h;
                g[i] = (f(PolicyVector(softmax(up), 1e-9)) - f(PolicyVector(softmax(dn), 1e-9))) / (2.0 * h);
            }
            return g;
        };
        auto compare = [&](const std::vector<double>& exact, const std::vector<double>& approx) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                num = std::max(num, std::abs(exact[i] - approx[i]));
                den = std::max(den, std::abs(approx[i]));
            }
            rep.check(num / std::max(den, 1e-3));
        };
        compare(exact_nominal_gradient(policy, 0, r), fd([&](const PolicyVector& p) { return dot(p.span(), r.span()); }));
        compare(exact_soft_drro_gradient(policy, 0, r, delta, tau),
                fd([&](const PolicyVector& p) { return soft_utility(p, r, delta, tau); }));
        const auto u = uncovered_rewards(policy.policy(0), r, delta);
        auto sorted = u;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        if (sorted[0] - sorted[1] >= 1e-2)
            compare(exact_hard_drro_gradient(policy, 0, r, delta),
                    fd([&](const PolicyVector& p) { return hard_utility(p, r, delta); }));
    }
    return rep;
}

inline SuiteReport verify_snis(const VerifyOptions& o, std::size_t trials = 1000) {
    // Coverage of the finite-sample bound at K = K_min, eta = 0.1: the failure rate may not exceed eta.
    SuiteReport rep{"snis-coverage", 0, 0, 0.0, 0.0};
    Rng rng = Rng(o.seed).split("snis");
    const std::size_t n = 6;
    const RewardVector r(detail::random_rewards(rng, n, 0.5));
    const auto pi = detail::random_policy(rng, n);
    const auto q = detail::random_policy(rng, n);
    const double delta = 1.0, tau = 2.0, eta = 0.1;
    std::vector<double> a(n), h(n);
    double U = 0.0, nu = 0.0, H = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::exp((r[i] - delta * pi[i]) / tau);
        U = std::max(U, a[i] / q[i]);
        nu += a[i];
        h[i] = rng.uniform() * 2.0 - 1.0;
        H = std::max(H, std::abs(h[i]));
    }
    double truth = 0.0;
    for (std::size_t i = 0; i < n; ++i) truth += a[i] / nu * h[i];
    const auto k_min = snis_error_bound(U, H, nu, 1, eta).k_min;
    const double bound = snis_error_bound(U, H, nu, k_min, eta).bound;
    std::size_t misses = 0;
    std::vector<SnisSample> samples(k_min);
    std::vector<double> hv(k_min);
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t k = 0; k < k_min; ++k) {
            const Index y = rng.categorical(q.span());
            samples[k] = {r[y], q[y], pi[y]};
            hv[k] = h[y];
        }
        if (std::abs(snis_estimate(samples, hv, delta, tau) - truth) > bound) ++misses;
    }
    const double rate = static_cast<double>(misses) / static_cast<double>(trials);
    rep.check(rate - eta);
    return rep;
}

inline SuiteReport verify_dominance(const VerifyOptions& o, std::size_t trials = 500) {
    SuiteReport rep{"dominance", 0, 0, 0.0, 1e-12};
    Rng rng = Rng(o.seed).split("dominance");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(9);
        const RewardVector r(detail::random_rewards(rng, n));
        const double delta = 0.01 + 3.0 * detail::spread(r.span()) * rng.uniform();
        std::vector<double> xs, ys;
        double x = *std::min_element(r.begin(), r.end()) - 1.0, y = 0.0;
        for (int k = 0; k < 6; ++k, x += 0.1 + 2.0 * rng.uniform(), y += 0.01 + 3.0 * rng.uniform()) {
            xs.push_back(x);
            ys.push_back(y);
        }
        const MonotoneTransform phi(TabulatedTransform{xs, ys});
        const auto res = dominance_check(r, delta, phi, 1e-12, o.solver);
        rep.check(res.dro_true_value - res.drro_true_value);
        rep.check_bool(res.prefix_dominance);
        rep.check_bool(res.dro_support >= res.drro_support);
    }
    return rep;
}

inline SuiteReport verify_lp_geometry(const VerifyOptions& o, std::size_t trials = 500) {
    SuiteReport rep{"lp-geometry", 0, 0, 0.0, 1e-12};
    Rng rng = Rng(o.seed).split("lp-geometry");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(7);
        const RewardVector r(detail::random_rewards(rng, n));
        const auto pi = detail::random_policy(rng, n);
        const double delta = 2.0 * rng.uniform();
        const double linf = lp_robust_regret(pi, r, delta, INFINITY);
        const double l1 = worst_case_regret(pi, r, 2.0 * delta).value;
        rep.check(std::abs(linf - l1) / (1.0 + std::abs(l1)));
    }
    return rep;
}

inline SuiteReport verify_certificates(const VerifyOptions& o, std::size_t trials = 200) {
    SuiteReport rep{"certificates", 0, 0, 0.0, 1e-10};
    Rng rng = Rng(o.seed).split("certificates");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t M = 1 + rng.index(3), n = 2 + rng.index(4);
        ConfidenceSet c;
        c.epsilon = rng.uniform();
        std::vector<double> w(M);
        double tw = 0.0;
        for (double& v : w) tw += v = 0.1 + rng.uniform();
        for (double& v : w) v /= tw;
        PolicyProfile pi, beta;
        for (std::size_t x = 0; x < M; ++x) {
            c.center.emplace_back(detail::random_rewards(rng, n));
            c.coverage.push_back(detail::random_policy(rng, n));
            pi.push_back(detail::random_policy(rng, n));
            beta.push_back(detail::random_policy(rng, n));
        }
        const auto r_dro = dro_adversarial_reward(pi, c, w);
        rep.check(std::abs(profile_value(r_dro, pi, w) - dro_certificate(pi, c, w)));
        const LocalPolicySet set{{pi, beta}, "pair"};
        const auto cert = drro_certificate(pi, set, c, w);
        const auto r_drro = drro_adversarial_reward(pi, set.members[cert.argmax], c, w);
        double attained = -INFINITY;
        for (const auto& b : set.members) attained = std::max(attained, profile_value(r_drro, b, w) - profile_value(r_drro, pi, w));
        rep.check(std::abs(attained - cert.value));
        rep.check(mean_weighted_l1_distance(r_drro, c.center, c.coverage, w) - c.epsilon);
    }
    return rep;
}

inline SuiteReport verify_bounds(const VerifyOptions& o, std::size_t trials = 200) {
    SuiteReport rep{"bounds", 0, 0, 0.0, 1e-10};
    Rng rng = Rng(o.seed).split("bounds");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t M = 1 + rng.index(2), n = 2 + rng.index(3);
        RegretInstance inst;
        auto& c = inst.confidence;
        c.epsilon = 0.5 * rng.uniform();
        inst.prompt_weights.assign(M, 1.0 / static_cast<double>(M));
        for (std::size_t x = 0; x < M; ++x) {
            c.center.emplace_back(detail::random_rewards(rng, n));
            c.coverage.push_back(detail::random_policy(rng, n));
        }
        // true reward: center plus an error scaled to lie inside the confidence set
        RewardProfile err;
        for (std::size_t x = 0; x < M; ++x) err.emplace_back(detail::random_rewards(rng, n, 1.0));
        RewardProfile zero;
        for (std::size_t x = 0; x < M; ++x) zero.emplace_back(std::vector<double>(n, 0.0));
        const double size = mean_weighted_l1_distance(err, zero, c.coverage, inst.prompt_weights);
        const double scale = size > 0.0 ? c.epsilon * rng.uniform() / size : 0.0;
        for (std::size_t x = 0; x < M; ++x) {
            std::vector<double> row(n);
            for (std::size_t i = 0; i < n; ++i) row[i] = c.center[x][i] + scale * err[x][i];
            inst.true_reward.emplace_back(std::move(row));
        }
        // candidates: every deterministic profile plus a few random ones
        std::vector<std::size_t> idx(M, 0);
        for (bool more = true; more;) {
            PolicyProfile p;
            for (std::size_t x = 0; x < M; ++x) p.push_back(PolicyVector::vertex(n, idx[x]));
            inst.candidates.members.push_back(std::move(p));
            more = false;
            for (std::size_t x = 0; x < M && !more; ++x) {
                if (++idx[x] < n) more = true;
                else idx[x] = 0;
            }
        }
        for (int k = 0; k < 4; ++k) {
            PolicyProfile p;
            for (std::size_t x = 0; x < M; ++x) p.push_back(detail::random_policy(rng, n));
            inst.candidates.members.push_back(std::move(p));
        }
        const auto r = verify_regret_bounds(inst);
        rep.check_bool(r.hypothesis_holds);
        rep.check(r.dro_regret - r.dro_bound);
        rep.check(r.drro_regret - r.drro_bound);
    }
    return rep;
}

inline SuiteReport verify_k3(const VerifyOptions& o, std::size_t trials = 20) {
    SuiteReport rep{"k3", 0, 0, 0.0, 0.02};
    Rng rng = Rng(o.seed).split("k3");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(7);
        const auto pi = detail::random_policy(rng, n);
        std::vector<double> ref_logits(n);
        for (std::size_t i = 0; i < n; ++i) ref_logits[i] = std::log(pi[i]) + 0.5 * rng.normal();
        const auto ref = softmax(ref_logits);
        const double exact = kl_divergence(pi.span(), ref);
        const std::size_t K = 100000;
        double s = 0.0, worst = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const Index y = rng.categorical(pi.span());
            const double term = k3_term(std::log(ref[y]), std::log(pi[y]));
            worst = std::min(worst, term);
            s += term;
        }
        rep.check(-worst);
        rep.check(std::abs(s / K - exact) / std::max(exact, 1e-3));
    }
    return rep;
}

using SuiteFn = std::function<SuiteReport(const VerifyOptions&)>;

inline const std::vector<std::pair<std::string, SuiteFn>>& verify_suites() {
    static const std::vector<std::pair<std::string, SuiteFn>> suites{
        {"water-filling", [](const VerifyOptions& o) { return verify_water_filling(o); }},
        {"adversary", [](const VerifyOptions& o) { return verify_adversary(o); }},
        {"sandwich", [](const VerifyOptions& o) { return verify_sandwich(o); }},
        {"gradients", [](const VerifyOptions& o) { return verify_gradients(o); }},
        {"snis-coverage", [](const VerifyOptions& o) { return verify_snis(o); }},
        {"dominance", [](const VerifyOptions& o) { return verify_dominance(o); }},
        {"lp-geometry", [](const VerifyOptions& o) { return verify_lp_geometry(o); }},
        {"certificates", [](const VerifyOptions& o) { return verify_certificates(o); }},
        {"bounds", [](const VerifyOptions& o) { return verify_bounds(o); }},
        {"k3", [](const VerifyOptions& o) { return verify_k3(o); }},
    };
    return suites;
}

}  // namespace drro
