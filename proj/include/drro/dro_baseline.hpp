#pragma once

/// Promptwise value-robust (DRO) baseline and the DRRO-vs-DRO dominance comparison.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "drro/core.hpp"
#include "drro/robust_simplex.hpp"

namespace drro {

struct DroSolution {
    PolicyVector policy;
    std::size_t support_size = 0;
    double objective = 0.0;
    std::vector<double> prefix_values;  ///< A_k - delta / k for k = 1..n (sorted order)
};

/// <pi, r_hat> - delta * max_i pi_i.
inline double dro_worst_case_value(const PolicyVector& pi, const RewardVector& r_hat, double delta) {
    require_same_size(pi.size(), r_hat.size(), "dro_worst_case_value");
    require(delta >= 0.0, "dro_worst_case_value: delta must be >= 0");
    return dot(pi.span(), r_hat.span()) - delta * max_value(pi.span());
}

/// Prefix-uniform maximizer of dro_worst_case_value (smallest maximizing prefix).
inline DroSolution solve_dro(const RewardVector& r_hat, double delta) {
    require(delta >= 0.0 && std::isfinite(delta), "solve_dro: delta must be finite and >= 0");
    const std::size_t n = r_hat.size();
    const auto order = descending_order(r_hat.span());

    std::vector<double> prefix(n);
    double sum = 0.0;
    std::size_t best = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += r_hat[order[k]];
        const double kk = static_cast<double>(k + 1);
        prefix[k] = sum / kk - delta / kk;
        if (prefix[k] > prefix[best]) best = k;
    }
    const std::size_t m = best + 1;
    std::vector<double> probs(n, 0.0);
    for (std::size_t k = 0; k < m; ++k) probs[order[k]] = 1.0 / static_cast<double>(m);
    PolicyVector policy(std::move(probs), 1e-9);
    return {policy, m, prefix[best], std::move(prefix)};
}

/// Strictly increasing reward transforms.
struct IdentityTransform {};
struct AffineTransform {
    double a = 1.0;
    double b = 0.0;
};
/// (x - shift)^exponent, defined for x > shift.
struct PowerTransform {
    double exponent = 1.0;
    double shift = 0.0;
};
/// Piecewise-linear interpolation through strictly increasing knots; linear extrapolation outside.
struct TabulatedTransform {
    std::vector<double> xs;
    std::vector<double> ys;
};

class MonotoneTransform {
  public:
    using Kind = std::variant<IdentityTransform, AffineTransform, PowerTransform, TabulatedTransform>;

    MonotoneTransform() = default;
    MonotoneTransform(Kind kind) : kind_(std::move(kind)) { validate(); }  // NOLINT(google-explicit-constructor)

    double operator()(double x) const {
        return std::visit([x](const auto& t) { return apply(t, x); }, kind_);
    }
    const Kind& kind() const noexcept { return kind_; }

  private:
    static double apply(const IdentityTransform&, double x) { return x; }
    static double apply(const AffineTransform& t, double x) { return t.a * x + t.b; }
    static double apply(const PowerTransform& t, double x) {
        require(x > t.shift, "PowerTransform: input must exceed shift");
        return std::pow(x - t.shift, t.exponent);
    }
    static double apply(const TabulatedTransform& t, double x) {
        const auto& xs = t.xs;
        const auto& ys = t.ys;
        std::size_t hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
        hi = std::clamp<std::size_t>(hi, 1, xs.size() - 1);
        const std::size_t lo = hi - 1;
        const double slope = (ys[hi] - ys[lo]) / (xs[hi] - xs[lo]);
        return ys[lo] + slope * (x - xs[lo]);
    }

    void validate() const {
        if (const auto* a = std::get_if<AffineTransform>(&kind_))
            require(a->a > 0.0, "AffineTransform: slope must be > 0");
        if (const auto* p = std::get_if<PowerTransform>(&kind_))
            require(p->exponent > 0.0, "PowerTransform: exponent must be > 0");
        if (const auto* t = std::get_if<TabulatedTransform>(&kind_)) {
            require(t->xs.size() >= 2 && t->xs.size() == t->ys.size(),
                    "TabulatedTransform: needs >= 2 knots of matching size");
            for (std::size_t i = 1; i < t->xs.size(); ++i)
                require(t->xs[i] > t->xs[i - 1] && t->ys[i] > t->ys[i - 1],
                        "TabulatedTransform: knots must be strictly increasing");
        }
    }

    Kind kind_ = IdentityTransform{};
};

struct DominanceResult {
    double drro_true_value;
    double dro_true_value;
    bool prefix_dominance;
    std::size_t drro_support;
    std::size_t dro_support;
};

using DrroSolver = std::function<RobustSolution(const RewardVector&, AmbiguityBudget)>;

/// Compare DRRO and DRO policies under the true reward phi(r_hat).
inline DominanceResult dominance_check(const RewardVector& r_hat, double delta, const MonotoneTransform& phi,
                                       double slack = 1e-12, const DrroSolver& solver = solve_water_filling) {
    require(delta > 0.0, "dominance_check: delta must be > 0");
    const auto order = descending_order(r_hat.span());
    for (std::size_t i = 1; i < order.size(); ++i)
        if (!(r_hat[order[i - 1]] > r_hat[order[i]]))
            throw std::invalid_argument("dominance_check: rewards must be pairwise distinct");

    const auto drro = solver(r_hat, delta);
    const auto dro = solve_dro(r_hat, delta);

    std::vector<double> truth(r_hat.size());
    for (Index i = 0; i < truth.size(); ++i) truth[i] = phi(r_hat[i]);

    bool dominates = true;
    double a = 0.0;
    double b = 0.0;
    for (std::size_t j = 0; j + 1 < order.size(); ++j) {
        a += drro.policy[order[j]];
        b += dro.policy[order[j]];
        if (a < b - slack) dominates = false;
    }
    std::size_t drro_support = 0;
    for (double p : drro.policy) drro_support += p > 0.0 ? 1 : 0;

    return {dot(drro.policy.span(), truth), dot(dro.policy.span(), truth), dominates, drro_support,
            dro.support_size};
}

}  // namespace drro
