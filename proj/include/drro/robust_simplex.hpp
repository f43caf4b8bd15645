#pragma once

/// Promptwise minimax-regret mathematics on the simplex: regret, the inner l1 adversary,
/// hard/soft robust utilities, the water-filling optimizer, lp regret, and a lattice oracle.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "drro/core.hpp"

namespace drro {

struct AdversaryResult {
    double value;
    Index adversary_index;
};

struct RobustSolution {
    PolicyVector policy;
    double t0 = 0.0;
    double t_star = 0.0;
    double worst_case_regret = 0.0;
    double uncovered_max = 0.0;
    Index adversary_index = 0;
    std::vector<Index> sort_permutation;  ///< sorted position -> input index
};

struct BruteForceResult {
    PolicyVector policy;
    double value;
};

/// max_i s_i - <pi, s>.
inline double regret(const PolicyVector& pi, const RewardVector& s) {
    require_same_size(pi.size(), s.size(), "regret");
    return std::max(0.0, max_value(s.span()) - dot(pi.span(), s.span()));
}

/// Uncovered rewards r_i - delta * pi_i.
inline std::vector<double> uncovered_rewards(const PolicyVector& pi, const RewardVector& r_hat, double delta) {
    require_same_size(pi.size(), r_hat.size(), "uncovered_rewards");
    std::vector<double> u(r_hat.size());
    for (Index i = 0; i < u.size(); ++i) u[i] = r_hat[i] - delta * pi[i];
    return u;
}

/// Closed-form worst case of regret over the l1 ball of radius delta around r_hat.
inline AdversaryResult worst_case_regret(const PolicyVector& pi, const RewardVector& r_hat, AmbiguityBudget delta) {
    const auto u = uncovered_rewards(pi, r_hat, delta);
    const Index k = argmax_lowest(u);
    return {delta.value() + u[k] - dot(pi.span(), r_hat.span()), k};
}

/// <pi, r_hat> - max_i (r_hat_i - delta * pi_i).
inline double hard_utility(const PolicyVector& pi, const RewardVector& r_hat, AmbiguityBudget delta) {
    const auto u = uncovered_rewards(pi, r_hat, delta);
    return dot(pi.span(), r_hat.span()) - max_value(u);
}

/// Log-sum-exp smoothing of hard_utility at temperature tau.
inline double soft_utility(const PolicyVector& pi, const RewardVector& r_hat, AmbiguityBudget delta, double tau) {
    require(tau > 0.0 && std::isfinite(tau), "soft_utility: tau must be > 0");
    auto u = uncovered_rewards(pi, r_hat, delta);
    for (double& x : u) x /= tau;
    return dot(pi.span(), r_hat.span()) - tau * log_sum_exp(u);
}

/// Vertex at the lowest-index maximizer of r_hat.
inline PolicyVector greedy_policy(const RewardVector& r_hat) {
    return PolicyVector::vertex(r_hat.size(), argmax_lowest(r_hat.span()));
}

/// Indices ordering r_hat descending; stable, so equal rewards keep input order.
inline std::vector<Index> descending_order(std::span<const double> r) {
    std::vector<Index> order(r.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return r[a] > r[b]; });
    return order;
}

namespace detail {

/// Water level t0 with sum_i (r_i - t0)_+ = delta, for r sorted descending.
inline double water_level(const std::vector<double>& r, double delta) {
    const std::size_t n = r.size();
    double gap_sum = 0.0;  // sum_{i<k} (r_1 - r_i)
    for (std::size_t k = 1; k <= n; ++k) {
        gap_sum += r[0] - r[k - 1];
        const double t = r[0] - (gap_sum + delta) / static_cast<double>(k);
        if (k == n || t >= r[k]) return t;
    }
    return r[n - 1];  // unreachable
}

}  // namespace detail

/// Exact minimax-regret policy for delta > 0.
inline RobustSolution solve_water_filling(const RewardVector& r_hat, AmbiguityBudget delta) {
    const double d = delta.value();
    if (!(d > 0.0))
        throw std::invalid_argument("solve_water_filling: delta must be > 0; use greedy_policy for delta = 0");

    const std::size_t n = r_hat.size();
    const auto order = descending_order(r_hat.span());
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = r_hat[order[i]];

    const double t0 = detail::water_level(r, d);

    // Smallest candidate in {t0} U {r_i >= t0} satisfying sum_{r_i > t} (r_1 - r_i) <= delta.
    std::vector<double> candidates{t0};
    for (double v : r)
        if (v >= t0 && v != candidates.back()) candidates.push_back(v);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    double t_star = r[0];
    for (double t : candidates) {
        double slope_mass = 0.0;
        for (double v : r)
            if (v > t) slope_mass += r[0] - v;
        if (slope_mass <= d) {
            t_star = t;
            break;
        }
    }

    std::vector<double> sorted_policy(n, 0.0);
    double rest = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        sorted_policy[i] = std::max(r[i] - t_star, 0.0) / d;
        rest += sorted_policy[i];
    }
    sorted_policy[0] = std::max(0.0, 1.0 - rest);

    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) probs[order[i]] = sorted_policy[i];
    PolicyVector policy(std::move(probs), 1e-9);

    const auto adversary = worst_case_regret(policy, r_hat, delta);
    RobustSolution sol{policy, t0, t_star, adversary.value, 0.0, adversary.adversary_index, order};
    sol.uncovered_max = max_value(uncovered_rewards(policy, r_hat, d));
    return sol;
}

/// Dual-norm factor ||e_i - pi||_q with 1/p + 1/q = 1.
inline double vertex_bonus_factor(const PolicyVector& pi, Index i, double p) {
    require(p >= 1.0, "vertex_bonus_factor: p must be >= 1");
    const std::size_t n = pi.size();
    auto diff = [&](Index j) { return (j == i ? 1.0 : 0.0) - pi[j]; };
    if (p == 1.0) {  // q = infinity
        double m = 0.0;
        for (Index j = 0; j < n; ++j) m = std::max(m, std::abs(diff(j)));
        return m;
    }
    if (std::isinf(p)) {  // q = 1
        double s = 0.0;
        for (Index j = 0; j < n; ++j) s += std::abs(diff(j));
        return s;
    }
    const double q = p / (p - 1.0);
    double s = 0.0;
    for (Index j = 0; j < n; ++j) s += std::pow(std::abs(diff(j)), q);
    return std::pow(s, 1.0 / q);
}

/// Worst-case regret over the lp ball: max_i { r_i - <pi, r> + delta * ||e_i - pi||_q }.
inline double lp_robust_regret(const PolicyVector& pi, const RewardVector& r_hat, double delta, double p) {
    require_same_size(pi.size(), r_hat.size(), "lp_robust_regret");
    require(p >= 1.0, "lp_robust_regret: p must be >= 1");
    require(delta >= 0.0, "lp_robust_regret: delta must be >= 0");
    const double value = dot(pi.span(), r_hat.span());
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < r_hat.size(); ++i)
        best = std::max(best, r_hat[i] - value + delta * vertex_bonus_factor(pi, i, p));
    return best;
}

/// Visit every point {k / resolution} of the n-simplex as integer counts.
inline void for_each_simplex_lattice_point(std::size_t n, int resolution,
                                           const std::function<void(const std::vector<int>&)>& visit) {
    require(n >= 1 && resolution >= 1, "for_each_simplex_lattice_point: invalid arguments");
    std::vector<int> counts(n, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int remaining) {
        if (pos + 1 == n) {
            counts[pos] = remaining;
            visit(counts);
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            counts[pos] = c;
            rec(pos + 1, remaining - c);
        }
    };
    rec(0, resolution);
}

/// Lattice-search minimizer of the worst-case regret (oracle for small n).
inline BruteForceResult brute_force_drro(const RewardVector& r_hat, double delta, int resolution) {
    const std::size_t n = r_hat.size();
    if (n > 6) throw std::invalid_argument("brute_force_drro: n > 6 is not supported");
    require(resolution >= 50, "brute_force_drro: resolution must be >= 50");
    require(delta >= 0.0, "brute_force_drro: delta must be >= 0");

    const double res = static_cast<double>(resolution);
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<int> best_counts;
    for_each_simplex_lattice_point(n, resolution, [&](const std::vector<int>& c) {
        double value = 0.0;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double p = c[i] / res;
            value += p * r_hat[i];
            top = std::max(top, r_hat[i] - delta * p);
        }
        const double wcr = delta + top - value;
        if (wcr < best_value) {
            best_value = wcr;
            best_counts = c;
        }
    });
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) probs[i] = best_counts[i] / res;
    return {PolicyVector(std::move(probs), 1e-9), best_value};
}

}  // namespace drro
