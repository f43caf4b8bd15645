#pragma once

/// Sampled estimation layer: SNIS weights and error bounds, group normalization,
/// scaled and dynamic budgets, the k3 KL estimator, and the Donsker-Varadhan bound.

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "drro/core.hpp"

namespace drro {

/// One sampled completion; policy_prob is the frozen rollout probability.
struct SnisSample {
    double reward;
    double proposal_prob;
    double policy_prob;
};

inline std::vector<double> snis_weights(std::span<const SnisSample> samples, double delta, double tau) {
    require(!samples.empty(), "snis_weights: need at least one sample");
    require(tau > 0.0, "snis_weights: tau must be > 0");
    std::vector<double> log_u(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        require(s.proposal_prob > 0.0, "snis_weights: proposal_prob must be > 0");
        log_u[k] = (s.reward - delta * s.policy_prob) / tau - std::log(s.proposal_prob);
    }
    return softmax(log_u);
}

inline double snis_estimate(std::span<const SnisSample> samples, std::span<const double> h_values, double delta,
                            double tau) {
    require_same_size(samples.size(), h_values.size(), "snis_estimate");
    const auto w = snis_weights(samples, delta, tau);
    return dot(w, h_values);
}

struct SnisBound {
    double bound;
    std::uint64_t k_min;
};

/// Finite-sample SNIS error bound and the sample size at which it applies.
inline SnisBound snis_error_bound(double U, double H, double nu, std::uint64_t K, double eta) {
    require(eta > 0.0 && eta < 1.0, "snis_error_bound: eta must lie in (0, 1)");
    require(U > 0.0 && nu > 0.0 && H >= 0.0 && K >= 1, "snis_error_bound: invalid parameters");
    const double log_term = std::log(4.0 / eta);
    const double k_min = std::ceil(2.0 * U * U / (nu * nu) * log_term);
    const double bound = 4.0 * U * H / nu * std::sqrt(log_term / (2.0 * static_cast<double>(K)));
    return {bound, static_cast<std::uint64_t>(k_min)};
}

/// probs / sum(probs), rescaled by the maximum first so tiny magnitudes do not underflow.
inline std::vector<double> group_normalize(std::span<const double> probs) {
    require(!probs.empty(), "group_normalize: empty input");
    double top = 0.0;
    for (double p : probs) {
        require(std::isfinite(p) && p >= 0.0, "group_normalize: probabilities must be finite and >= 0");
        top = std::max(top, p);
    }
    require(top > 0.0, "group_normalize: all probabilities are zero");
    std::vector<double> out(probs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) total += out[i] = probs[i] / top;
    for (double& x : out) x /= total;
    return out;
}

/// Same as group_normalize, taking log-probabilities.
inline std::vector<double> group_normalize_log(std::span<const double> log_probs) {
    require(!log_probs.empty(), "group_normalize_log: empty input");
    return softmax(log_probs);
}

inline double scaled_budget(double delta_conceptual, std::size_t G, std::size_t n) {
    require(G >= 1, "scaled_budget: G must be >= 1");
    if (G > n) throw std::invalid_argument("scaled_budget: group size exceeds response count");
    return static_cast<double>(G) / static_cast<double>(n) * delta_conceptual;
}

/// Per-sample k3 term exp(z) - z - 1, z = log_ref - log_rollout.
inline double k3_term(double log_ref, double log_rollout) {
    const double z = log_ref - log_rollout;
    return std::max(0.0, std::expm1(z) - z);
}

inline double k3_kl(std::span<const double> log_ref, std::span<const double> log_rollout) {
    require_same_size(log_ref.size(), log_rollout.size(), "k3_kl");
    require(!log_ref.empty(), "k3_kl: empty input");
    double s = 0.0;
    for (std::size_t k = 0; k < log_ref.size(); ++k) s += k3_term(log_ref[k], log_rollout[k]);
    return s / static_cast<double>(log_ref.size());
}

enum class BudgetMode { fixed, dynamic };

inline std::string to_string(BudgetMode m) { return m == BudgetMode::fixed ? "fixed" : "dynamic"; }

struct BudgetConfig {
    double base = 40.0;   ///< scaled budget at zero drift
    double alpha = 10.0;  ///< KL coefficient (ignored in fixed mode)
    BudgetMode mode = BudgetMode::fixed;
    std::size_t window = 20;  ///< smoothing window for the KL estimate, in updates
    bool per_prompt = false;  ///< use each group's own k3 estimate instead of the smoothed run-level value

    bool operator==(const BudgetConfig&) const = default;
};

inline double dynamic_budget(const BudgetConfig& config, double kl_estimate) {
    require(kl_estimate >= 0.0, "dynamic_budget: kl_estimate must be >= 0");
    if (config.mode == BudgetMode::fixed) return config.base;
    return config.base + config.alpha * kl_estimate;
}

/// Sliding-window mean of recent KL estimates.
class KlSmoother {
  public:
    explicit KlSmoother(std::size_t window) : window_(window) {
        require(window >= 1, "KlSmoother: window must be >= 1");
    }
    double push(double kl) {
        values_.push_back(kl);
        sum_ += kl;
        if (values_.size() > window_) {
            sum_ -= values_.front();
            values_.pop_front();
        }
        return value();
    }
    double value() const {
        if (values_.empty()) return 0.0;
        return std::max(0.0, sum_ / static_cast<double>(values_.size()));
    }

  private:
    std::size_t window_;
    std::deque<double> values_;
    double sum_ = 0.0;
};

struct DvBound {
    double lhs;
    double rhs;
};

/// <pi, h> <= (KL(pi || pi0) + log sum_i pi0_i exp(lambda h_i)) / lambda.
inline DvBound dv_bound(const PolicyVector& pi, const PolicyVector& pi0, std::span<const double> h, double lambda) {
    require_same_size(pi.size(), pi0.size(), "dv_bound");
    require_same_size(pi.size(), h.size(), "dv_bound");
    require(lambda > 0.0, "dv_bound: lambda must be > 0");
    for (std::size_t i = 0; i < h.size(); ++i) {
        require(h[i] >= 0.0, "dv_bound: h must be >= 0");
        if (pi[i] > 0.0 && !(pi0[i] > 0.0)) throw std::invalid_argument("dv_bound: support violation");
    }
    std::vector<double> terms;
    terms.reserve(h.size());
    for (std::size_t i = 0; i < h.size(); ++i)
        if (pi0[i] > 0.0) terms.push_back(std::log(pi0[i]) + lambda * h[i]);
    const double rhs = (kl_divergence(pi.span(), pi0.span()) + log_sum_exp(terms)) / lambda;
    return {dot(pi.span(), h), rhs};
}

}  // namespace drro
