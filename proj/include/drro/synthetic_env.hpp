#pragma once

/// Seeded proxy-vs-gold environments and the evaluation protocol (re-centered improvements,
/// exact sequence KL, pairwise agreement, frontier summaries, pilot budget calibration).

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <set>
#include <string>
#include <vector>

#include "drro/core.hpp"
#include "drro/rng.hpp"
#include "drro/robust_simplex.hpp"
#include "drro/tabular_policy.hpp"

namespace drro {

enum class HackTargets { low_coverage, random };

inline std::string to_string(HackTargets t) { return t == HackTargets::low_coverage ? "low_coverage" : "random"; }

struct MisspecConfig {
    double noise_sigma = 0.1;
    double hack_fraction = 0.0625;
    double hack_bonus = 0.0;  ///< ignored when target_agreement is set
    HackTargets hack_targets = HackTargets::low_coverage;
    std::optional<double> target_agreement = 0.85;

    bool operator==(const MisspecConfig&) const = default;
};

struct EnvironmentConfig {
    std::size_t prompts = 64;
    std::size_t responses = 64;
    std::uint64_t seed = 2024;
    MisspecConfig misspec;
    double init_logit_scale = 0.1;      ///< std of the i.i.d. normal initial logits
    double init_gold_coupling = 0.3;    ///< initial logits += coupling * gold
    std::size_t ensemble_size = 5;
    double ensemble_sigma = 0.1;        ///< per-member noise std
    std::size_t agreement_pairs = 100000;

    bool operator==(const EnvironmentConfig&) const = default;
};

struct SyntheticEnvironment {
    EnvironmentConfig config;
    std::vector<RewardVector> gold;                   ///< [M]
    std::vector<RewardVector> proxy;                  ///< [M]
    std::vector<std::vector<RewardVector>> ensemble;  ///< [E][M]
    TabularSoftmaxPolicy initial;
    std::vector<PolicyVector> coverage;               ///< [M]
    std::vector<std::vector<Index>> hack_targets;     ///< [M] indices with inflated proxy
    double hack_bonus = 0.0;                          ///< effective bonus after calibration
    double agreement = 1.0;                           ///< measured gold/proxy agreement

    std::size_t prompts() const { return config.prompts; }
    std::size_t responses() const { return config.responses; }

    bool operator==(const SyntheticEnvironment&) const = default;
};

/// Fraction of sampled within-prompt response pairs ranked the same way by a and b.
/// A tie in exactly one scorer counts as disagreement; ties in both count as agreement.
inline double pairwise_agreement(const std::vector<RewardVector>& a, const std::vector<RewardVector>& b,
                                 std::size_t pairs, std::uint64_t seed) {
    require(pairs >= 1, "pairwise_agreement: pairs must be >= 1");
    require_same_size(a.size(), b.size(), "pairwise_agreement");
    require(!a.empty(), "pairwise_agreement: no prompts");
    Rng rng = Rng(seed).split("agreement");
    std::size_t agree = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
        const Index x = rng.index(a.size());
        const std::size_t n = a[x].size();
        require_same_size(n, b[x].size(), "pairwise_agreement");
        require(n >= 2, "pairwise_agreement: prompts need >= 2 responses");
        const Index i = rng.index(n);
        Index j = rng.index(n - 1);
        if (j >= i) ++j;
        const double da = a[x][i] - a[x][j];
        const double db = b[x][i] - b[x][j];
        const int sa = (da > 0) - (da < 0);
        const int sb = (db > 0) - (db < 0);
        agree += sa == sb ? 1 : 0;
    }
    return static_cast<double>(agree) / static_cast<double>(pairs);
}

namespace detail {

inline std::vector<RewardVector> assemble_proxy(const std::vector<RewardVector>& gold,
                                                const std::vector<std::vector<double>>& noise,
                                                const std::vector<std::vector<Index>>& targets, double bonus) {
    std::vector<RewardVector> proxy;
    proxy.reserve(gold.size());
    for (std::size_t x = 0; x < gold.size(); ++x) {
        std::vector<double> row(gold[x].size());
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = gold[x][i] + noise[x][i];
        for (Index i : targets[x]) row[i] += bonus;
        proxy.emplace_back(std::move(row));
    }
    return proxy;
}

}  // namespace detail

/// Bisect the hack bonus on [0, kHackBonusBracket] (doubled while agreement stays above target) and
/// return the first midpoint whose agreement is within kAgreementTolerance of the target.
inline constexpr double kHackBonusBracket = 16.0;
inline constexpr double kAgreementTolerance = 0.01;

template <class AgreementAt>
double calibrate_hack_bonus(AgreementAt&& agreement_at, double target) {
    if (std::abs(agreement_at(0.0) - target) <= kAgreementTolerance) return 0.0;
    double lo = 0.0;
    double hi = kHackBonusBracket;
    while (hi < 1e6 && agreement_at(hi) > target + kAgreementTolerance) hi *= 2.0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 50; ++step) {
        const double mid = 0.5 * (lo + hi);
        const double ag = agreement_at(mid);
        if (std::abs(ag - target) <= kAgreementTolerance) return mid;
        best_gap = std::min(best_gap, std::abs(ag - target));
        (ag > target ? lo : hi) = mid;
    }
    throw std::runtime_error("build_environment: target_agreement " + std::to_string(target) +
                             " is infeasible (closest measured gap " + std::to_string(best_gap) + ")");
}

inline SyntheticEnvironment build_environment(const EnvironmentConfig& config) {
    const std::size_t M = config.prompts;
    const std::size_t n = config.responses;
    const auto& mis = config.misspec;
    require(M >= 1 && n >= 1, "build_environment: prompts and responses must be >= 1");
    require(mis.noise_sigma >= 0.0, "build_environment: noise_sigma must be >= 0");
    require(mis.hack_fraction >= 0.0 && mis.hack_fraction < 1.0, "build_environment: hack_fraction must lie in [0, 1)");
    require(mis.hack_bonus >= 0.0, "build_environment: hack_bonus must be >= 0");
    require(config.init_logit_scale >= 0.0, "build_environment: init_logit_scale must be >= 0");
    require(config.ensemble_sigma >= 0.0, "build_environment: ensemble_sigma must be >= 0");
    if (mis.target_agreement)
        require(*mis.target_agreement > 0.5 && *mis.target_agreement <= 1.0,
                "build_environment: target_agreement must lie in (0.5, 1]");

    const Rng root(config.seed);
    SyntheticEnvironment env;
    env.config = config;

    Rng gold_rng = root.split("gold");
    for (std::size_t x = 0; x < M; ++x) {
        std::vector<double> row(n);
        for (double& v : row) v = gold_rng.normal();
        env.gold.emplace_back(std::move(row));
    }

    Rng init_rng = root.split("initial-logits");
    std::vector<double> logits(M * n);
    for (std::size_t x = 0; x < M; ++x)
        for (std::size_t i = 0; i < n; ++i)
            logits[x * n + i] = config.init_logit_scale * init_rng.normal() + config.init_gold_coupling * env.gold[x][i];
    env.initial = TabularSoftmaxPolicy(M, n, std::move(logits));
    for (std::size_t x = 0; x < M; ++x) env.coverage.push_back(env.initial.policy(x));

    const auto hacked = static_cast<std::size_t>(std::ceil(mis.hack_fraction * static_cast<double>(n) - 1e-9));
    Rng hack_rng = root.split("hack-targets");
    for (std::size_t x = 0; x < M; ++x) {
        std::vector<Index> order(n);
        std::iota(order.begin(), order.end(), Index{0});
        if (mis.hack_targets == HackTargets::low_coverage) {
            const auto p = env.initial.probs(x);
            std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return p[a] < p[b]; });
        } else {
            std::shuffle(order.begin(), order.end(), hack_rng);
        }
        order.resize(hacked);
        std::sort(order.begin(), order.end());
        env.hack_targets.push_back(std::move(order));
    }

    Rng noise_rng = root.split("proxy-noise");
    std::vector<std::vector<double>> noise(M, std::vector<double>(n));
    for (auto& row : noise)
        for (double& v : row) v = mis.noise_sigma * noise_rng.normal();

    const std::uint64_t agreement_seed = Rng(config.seed).split("agreement-pairs")();
    auto agreement_at = [&](double bonus) {
        return pairwise_agreement(env.gold, detail::assemble_proxy(env.gold, noise, env.hack_targets, bonus),
                                  config.agreement_pairs, agreement_seed);
    };

    double bonus = mis.hack_bonus;
    if (mis.target_agreement) bonus = calibrate_hack_bonus(agreement_at, *mis.target_agreement);
    env.hack_bonus = bonus;
    env.proxy = detail::assemble_proxy(env.gold, noise, env.hack_targets, bonus);
    env.agreement = agreement_at(bonus);

    // Members share the systematic inflation and differ in their own noise.
    Rng ens_rng = root.split("ensemble");
    for (std::size_t j = 0; j < config.ensemble_size; ++j) {
        Rng member_rng = ens_rng.split(static_cast<std::uint64_t>(j));
        std::vector<std::vector<double>> member_noise(M, std::vector<double>(n));
        for (auto& row : member_noise)
            for (double& v : row) v = config.ensemble_sigma * member_rng.normal();
        env.ensemble.push_back(detail::assemble_proxy(env.gold, member_noise, env.hack_targets, bonus));
    }
    return env;
}

/// Evaluation fields of a run-log row.
struct EvalRecord {
    double kl_seq;
    double proxy_raw;
    double gold_raw;
};

inline EvalRecord evaluate(const TabularSoftmaxPolicy& policy, const SyntheticEnvironment& env,
                           const TabularSoftmaxPolicy& initial) {
    require(policy.prompts() == env.prompts() && policy.responses() == env.responses(),
            "evaluate: policy shape does not match environment");
    require(initial.prompts() == policy.prompts() && initial.responses() == policy.responses(),
            "evaluate: initial policy shape mismatch");
    double kl = 0.0, proxy = 0.0, gold = 0.0;
    for (std::size_t x = 0; x < env.prompts(); ++x) {
        const auto p = policy.probs(x);
        const auto p0 = initial.probs(x);
        kl += kl_divergence(p, p0);
        proxy += dot(p, env.proxy[x].span());
        gold += dot(p, env.gold[x].span());
    }
    const double m = static_cast<double>(env.prompts());
    return {kl / m, proxy / m, gold / m};
}

struct RunLog {
    std::size_t step = 0;
    double kl_seq = 0.0;
    double proxy_raw = 0.0;
    double gold_raw = 0.0;
    double proxy_improvement = 0.0;
    double gold_improvement = 0.0;
    double budget = 0.0;
    std::string method;
    std::uint64_t seed = 0;

    bool operator==(const RunLog&) const = default;
};

struct FrontierSummary {
    double peak_gold = 0.0;
    double proxy_at_peak = 0.0;
    double gold_proxy_gap = 0.0;
    double peak_kl = 0.0;
    std::size_t peak_step = 0;
};

inline FrontierSummary frontier(std::span<const RunLog> logs) {
    require(!logs.empty(), "frontier: empty run log");
    std::size_t best = 0;
    for (std::size_t i = 1; i < logs.size(); ++i)
        if (logs[i].gold_improvement > logs[best].gold_improvement) best = i;
    const auto& r = logs[best];
    return {r.gold_improvement, r.proxy_improvement, r.gold_improvement - r.proxy_improvement, r.kl_seq, r.step};
}

/// Mean promptwise l1 proxy/gold discrepancy over responses sampled from the initial policy.
inline double pilot_budget_calibration(const SyntheticEnvironment& env, std::size_t pilot_prompts,
                                       std::size_t pilot_samples, std::uint64_t seed) {
    require(pilot_prompts >= 1 && pilot_samples >= 1, "pilot_budget_calibration: pilot sizes must be >= 1");
    Rng rng = Rng(seed).split("pilot");
    double total = 0.0;
    for (std::size_t p = 0; p < pilot_prompts; ++p) {
        const Index x = rng.index(env.prompts());
        const auto probs = env.initial.probs(x);
        std::set<Index> seen;
        for (std::size_t s = 0; s < pilot_samples; ++s) seen.insert(rng.categorical(probs));
        for (Index i : seen) total += std::abs(env.proxy[x][i] - env.gold[x][i]);
    }
    return total / static_cast<double>(pilot_prompts);
}

}  // namespace drro
