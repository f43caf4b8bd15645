#pragma once

/// Concentrability coefficients, DRO/DRRO certificates under the mean weighted-l1
/// confidence set, and finite-instance verification of the associated regret bounds.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "drro/core.hpp"

namespace drro {

using PolicyProfile = std::vector<PolicyVector>;  ///< one policy per prompt
using RewardProfile = std::vector<RewardVector>;  ///< one reward vector per prompt

struct LocalPolicySet {
    std::vector<PolicyProfile> members;
    std::string label;
};

struct ConfidenceSet {
    double epsilon = 0.0;
    RewardProfile center;
    std::vector<PolicyVector> coverage;
};

inline double weighted_l1(std::span<const double> e, const PolicyVector& mu) {
    require_same_size(e.size(), mu.size(), "weighted_l1");
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!(mu[i] > 0.0)) throw std::invalid_argument("weighted_l1: coverage must be strictly positive");
        s += mu[i] * std::abs(e[i]);
    }
    return s;
}

inline double weighted_linf_dual(std::span<const double> v, const PolicyVector& mu) {
    require_same_size(v.size(), mu.size(), "weighted_linf_dual");
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(mu[i] > 0.0)) throw std::invalid_argument("weighted_linf_dual: coverage must be strictly positive");
        m = std::max(m, std::abs(v[i]) / mu[i]);
    }
    return m;
}

namespace detail {

inline void check_weights(std::span<const double> w, std::size_t prompts) {
    require_same_size(w.size(), prompts, "prompt_weights");
    double total = 0.0;
    for (double x : w) {
        require(x >= 0.0, "prompt_weights must be >= 0");
        total += x;
    }
    require(std::abs(total - 1.0) <= kTolerance, "prompt_weights must sum to 1");
}

inline std::vector<double> difference(const PolicyVector& a, const PolicyVector& b) {
    require_same_size(a.size(), b.size(), "policy difference");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

struct Coordinate {
    Index prompt = 0;
    Index response = 0;
    double exposure = -1.0;
};

/// Supported (prompt, response) maximizing |v_x(y)| / mu_x(y).
template <class Exposure>
Coordinate max_exposure(std::size_t prompts, const std::vector<PolicyVector>& coverage, std::span<const double> w,
                        Exposure&& v) {
    Coordinate best;
    for (std::size_t x = 0; x < prompts; ++x) {
        if (!(w[x] > 0.0)) continue;
        for (std::size_t y = 0; y < coverage[x].size(); ++y) {
            const double e = std::abs(v(x, y)) / coverage[x][y];
            if (e > best.exposure) best = {x, y, e};
        }
    }
    return best;
}

}  // namespace detail

/// Sum over prompts of weight * <pi(x), r(x)>.
inline double profile_value(const RewardProfile& r, const PolicyProfile& pi, std::span<const double> w) {
    require_same_size(r.size(), pi.size(), "profile_value");
    require_same_size(r.size(), w.size(), "profile_value");
    double s = 0.0;
    for (std::size_t x = 0; x < r.size(); ++x) s += w[x] * dot(pi[x].span(), r[x].span());
    return s;
}

/// Sum over prompts of weight * weighted_l1(a(x) - b(x), mu_x).
inline double mean_weighted_l1_distance(const RewardProfile& a, const RewardProfile& b,
                                        const std::vector<PolicyVector>& coverage, std::span<const double> w) {
    require_same_size(a.size(), b.size(), "mean_weighted_l1_distance");
    double s = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x) {
        std::vector<double> e(a[x].size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = a[x][i] - b[x][i];
        s += w[x] * weighted_l1(e, coverage[x]);
    }
    return s;
}

inline double absolute_concentrability(const PolicyProfile& pi, const std::vector<PolicyVector>& coverage,
                                       std::span<const double> w) {
    require_same_size(pi.size(), coverage.size(), "absolute_concentrability");
    detail::check_weights(w, pi.size());
    double m = 0.0;
    for (std::size_t x = 0; x < pi.size(); ++x)
        if (w[x] > 0.0) m = std::max(m, weighted_linf_dual(pi[x].span(), coverage[x]));
    return m;
}

inline double relative_concentrability(const PolicyProfile& beta, const PolicyProfile& pi,
                                       const std::vector<PolicyVector>& coverage, std::span<const double> w) {
    require_same_size(beta.size(), pi.size(), "relative_concentrability");
    require_same_size(pi.size(), coverage.size(), "relative_concentrability");
    detail::check_weights(w, pi.size());
    double m = 0.0;
    for (std::size_t x = 0; x < pi.size(); ++x)
        if (w[x] > 0.0) m = std::max(m, weighted_linf_dual(detail::difference(beta[x], pi[x]), coverage[x]));
    return m;
}

/// Worst-case value of pi over the confidence set.
inline double dro_certificate(const PolicyProfile& pi, const ConfidenceSet& c, std::span<const double> w) {
    require(c.epsilon >= 0.0, "dro_certificate: epsilon must be >= 0");
    return profile_value(c.center, pi, w) - c.epsilon * absolute_concentrability(pi, c.coverage, w);
}

/// Reward profile in the confidence set attaining dro_certificate.
inline RewardProfile dro_adversarial_reward(const PolicyProfile& pi, const ConfidenceSet& c, std::span<const double> w) {
    detail::check_weights(w, pi.size());
    const auto at = detail::max_exposure(pi.size(), c.coverage, w, [&](Index x, Index y) { return pi[x][y]; });
    RewardProfile r = c.center;
    std::vector<double> row = r[at.prompt].values();
    row[at.response] -= c.epsilon / (w[at.prompt] * c.coverage[at.prompt][at.response]);
    r[at.prompt] = RewardVector(std::move(row));
    return r;
}

struct DrroCertificate {
    double value;
    std::size_t argmax;  ///< candidate index attaining the certificate
};

/// Worst-case regret of pi against the candidate set over the confidence set.
inline DrroCertificate drro_certificate(const PolicyProfile& pi, const LocalPolicySet& candidates, const ConfidenceSet& c,
                                        std::span<const double> w) {
    if (candidates.members.empty()) throw std::invalid_argument("drro_certificate: empty candidate set");
    const double base = profile_value(c.center, pi, w);
    DrroCertificate best{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t j = 0; j < candidates.members.size(); ++j) {
        const auto& beta = candidates.members[j];
        const double v = profile_value(c.center, beta, w) - base +
                         c.epsilon * relative_concentrability(beta, pi, c.coverage, w);
        if (v > best.value) best = {v, j};
    }
    return best;
}

/// Reward profile in the confidence set that maximizes the regret of pi against beta.
inline RewardProfile drro_adversarial_reward(const PolicyProfile& pi, const PolicyProfile& beta, const ConfidenceSet& c,
                                             std::span<const double> w) {
    detail::check_weights(w, pi.size());
    const auto at = detail::max_exposure(pi.size(), c.coverage, w,
                                         [&](Index x, Index y) { return beta[x][y] - pi[x][y]; });
    RewardProfile r = c.center;
    if (at.exposure <= 0.0) return r;
    const double sign = beta[at.prompt][at.response] >= pi[at.prompt][at.response] ? 1.0 : -1.0;
    std::vector<double> row = r[at.prompt].values();
    row[at.response] += sign * c.epsilon / (w[at.prompt] * c.coverage[at.prompt][at.response]);
    r[at.prompt] = RewardVector(std::move(row));
    return r;
}

struct RegretInstance {
    ConfidenceSet confidence;
    std::vector<double> prompt_weights;
    RewardProfile true_reward;
    LocalPolicySet candidates;
};

struct RegretBoundReport {
    bool hypothesis_holds = false;
    double true_error = 0.0;  ///< mean weighted-l1 distance of the true reward from the center
    std::size_t optimal_index = 0;
    std::size_t dro_index = 0;
    std::size_t drro_index = 0;
    double dro_regret = 0.0;
    double dro_bound = 0.0;
    double drro_regret = 0.0;
    double drro_bound = 0.0;
    std::vector<std::size_t> plausible_optimal;
    bool dro_bound_holds = false;
    bool drro_bound_holds = false;
    std::string plausible_set_method = "single-coordinate extreme perturbations of the confidence set";
};

namespace detail {

inline std::vector<std::size_t> argmax_set(const std::vector<double>& v) {
    const double m = v[argmax_lowest(v)];
    const double tol = 1e-12 * (1.0 + std::abs(m));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] >= m - tol) out.push_back(i);
    return out;
}

}  // namespace detail

/// Check the DRO and DRRO true-regret bounds on a finite instance.
inline RegretBoundReport verify_regret_bounds(const RegretInstance& inst, double slack = 1e-10) {
    const auto& c = inst.confidence;
    const auto& w = inst.prompt_weights;
    const auto& cands = inst.candidates.members;
    if (cands.empty()) throw std::invalid_argument("verify_regret_bounds: empty candidate set");
    detail::check_weights(w, c.center.size());

    RegretBoundReport rep;
    rep.true_error = mean_weighted_l1_distance(inst.true_reward, c.center, c.coverage, w);
    rep.hypothesis_holds = rep.true_error <= c.epsilon + slack;

    std::vector<double> true_values(cands.size()), dro_values(cands.size()), drro_values(cands.size());
    for (std::size_t j = 0; j < cands.size(); ++j) {
        true_values[j] = profile_value(inst.true_reward, cands[j], w);
        dro_values[j] = dro_certificate(cands[j], c, w);
        drro_values[j] = drro_certificate(cands[j], inst.candidates, c, w).value;
    }
    rep.optimal_index = argmax_lowest(true_values);
    rep.dro_index = argmax_lowest(dro_values);
    std::vector<double> neg(drro_values.size());
    for (std::size_t j = 0; j < neg.size(); ++j) neg[j] = -drro_values[j];
    rep.drro_index = argmax_lowest(neg);

    const auto& star = cands[rep.optimal_index];
    rep.dro_regret = true_values[rep.optimal_index] - true_values[rep.dro_index];
    rep.drro_regret = true_values[rep.optimal_index] - true_values[rep.drro_index];
    rep.dro_bound = 2.0 * c.epsilon * absolute_concentrability(star, c.coverage, w);

    // Plausible optima: candidate-set maximizers under the center and every extreme single-coordinate shift.
    std::vector<bool> plausible(cands.size(), false);
    auto collect = [&](const RewardProfile& r) {
        std::vector<double> v(cands.size());
        for (std::size_t j = 0; j < cands.size(); ++j) v[j] = profile_value(r, cands[j], w);
        for (std::size_t j : detail::argmax_set(v)) plausible[j] = true;
    };
    collect(c.center);
    if (c.epsilon > 0.0) {
        for (std::size_t x = 0; x < c.center.size(); ++x) {
            if (!(w[x] > 0.0)) continue;
            for (std::size_t y = 0; y < c.center[x].size(); ++y) {
                for (double sign : {1.0, -1.0}) {
                    RewardProfile r = c.center;
                    std::vector<double> row = r[x].values();
                    row[y] += sign * c.epsilon / (w[x] * c.coverage[x][y]);
                    r[x] = RewardVector(std::move(row));
                    collect(r);
                }
            }
        }
    }
    double radius = 0.0;
    for (std::size_t j = 0; j < cands.size(); ++j) {
        if (!plausible[j]) continue;
        rep.plausible_optimal.push_back(j);
        radius = std::max(radius, relative_concentrability(cands[j], star, c.coverage, w));
    }
    rep.drro_bound = 2.0 * c.epsilon * radius;
    rep.dro_bound_holds = rep.dro_regret <= rep.dro_bound + slack;
    rep.drro_bound_holds = rep.drro_regret <= rep.drro_bound + slack;
    return rep;
}

}  // namespace drro
