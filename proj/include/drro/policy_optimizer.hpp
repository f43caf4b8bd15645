#pragma once

/// Exact and sampled policy gradients, GRPO advantages, sampled reward shaping,
/// the clipped surrogate, and the grouped training loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "drro/core.hpp"
#include "drro/rng.hpp"
#include "drro/robust_simplex.hpp"
#include "drro/shaping_estimators.hpp"
#include "drro/synthetic_env.hpp"
#include "drro/tabular_policy.hpp"

namespace drro {

namespace detail {

/// Softmax score-function push: pi * (s - <pi, s>).
inline std::vector<double> score_push(std::span<const double> pi, std::span<const double> s) {
    const double base = dot(pi, s);
    std::vector<double> g(pi.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = pi[i] * (s[i] - base);
    return g;
}

}  // namespace detail

/// Gradient of <pi_theta(x), r_hat> with respect to the prompt's logits.
inline std::vector<double> exact_nominal_gradient(const TabularSoftmaxPolicy& policy, Index x, const RewardVector& r_hat) {
    require_same_size(policy.responses(), r_hat.size(), "exact_nominal_gradient");
    return detail::score_push(policy.probs(x), r_hat.span());
}

/// Gradient of the hard robust utility; the uncovered-reward maximizer must be unique.
inline std::vector<double> exact_hard_drro_gradient(const TabularSoftmaxPolicy& policy, Index x,
                                                    const RewardVector& r_hat, double delta) {
    require_same_size(policy.responses(), r_hat.size(), "exact_hard_drro_gradient");
    require(delta >= 0.0, "exact_hard_drro_gradient: delta must be >= 0");
    const auto pi = policy.probs(x);
    std::vector<double> u(pi.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = r_hat[i] - delta * pi[i];
    const Index star = argmax_lowest(u);
    const double tol = 1e-12 * (1.0 + std::abs(u[star]));
    for (std::size_t i = 0; i < u.size(); ++i)
        if (i != star && u[i] >= u[star] - tol)
            throw std::domain_error("exact_hard_drro_gradient: nondifferentiable point (tied maximizer)");
    std::vector<double> s(r_hat.values());
    s[star] += delta;
    return detail::score_push(pi, s);
}

/// Gradient of the soft robust utility with delta held fixed.
inline std::vector<double> exact_soft_drro_gradient(const TabularSoftmaxPolicy& policy, Index x,
                                                    const RewardVector& r_hat, double delta, double tau) {
    require_same_size(policy.responses(), r_hat.size(), "exact_soft_drro_gradient");
    require(tau > 0.0, "exact_soft_drro_gradient: tau must be > 0");
    const auto pi = policy.probs(x);
    std::vector<double> z(pi.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (r_hat[i] - delta * pi[i]) / tau;
    const auto sigma = softmax(z);
    std::vector<double> s(r_hat.values());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += delta * sigma[i];
    return detail::score_push(pi, s);
}

/// Single-sample REINFORCE estimate r_y * (e_y - pi) of the nominal gradient.
inline std::vector<double> sampled_nominal_gradient(const TabularSoftmaxPolicy& policy, Index x,
                                                    const RewardVector& r_hat, Rng& rng) {
    const auto pi = policy.probs(x);
    const Index y = rng.categorical(pi);
    std::vector<double> g(pi.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = r_hat[y] * ((i == y ? 1.0 : 0.0) - pi[i]);
    return g;
}

/// (r - mean) / (population std + eps_adv).
inline std::vector<double> grpo_advantages(std::span<const double> rewards, double eps_adv) {
    require(rewards.size() >= 2, "grpo_advantages: group size must be >= 2");
    require(eps_adv >= 0.0, "grpo_advantages: eps_adv must be >= 0");
    const double G = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= G;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double denom = std::sqrt(var / G) + eps_adv;
    std::vector<double> adv(rewards.size(), 0.0);
    if (denom == 0.0) return adv;
    for (std::size_t k = 0; k < adv.size(); ++k) adv[k] = (rewards[k] - mean) / denom;
    return adv;
}

struct RolloutGroup {
    Index prompt_index = 0;
    std::vector<Index> response_indices;
    std::vector<double> proxy_rewards;
    std::vector<double> rollout_probs;
    std::vector<double> log_rollout_probs;
    std::vector<double> normalized_probs;
    std::vector<double> shaped_rewards;
    std::vector<double> advantages;
    std::vector<double> ratios;

    std::size_t size() const { return response_indices.size(); }
};

/// Add delta to the lowest-index maximizer of r - delta * normalized_prob.
inline std::vector<double> shape_hard(const RolloutGroup& group, double delta_scaled) {
    const auto& r = group.proxy_rewards;
    const auto& p = group.normalized_probs;
    require_same_size(r.size(), p.size(), "shape_hard");
    std::vector<double> u(r.size());
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = r[k] - delta_scaled * p[k];
    std::vector<double> shaped(r);
    shaped[argmax_lowest(u)] += delta_scaled;
    return shaped;
}

/// r + delta * G * w * normalized_prob with SNIS weights w proportional to exp((r - delta p)/tau) / p.
inline std::vector<double> shape_soft(const RolloutGroup& group, double delta_scaled, double tau) {
    const auto& r = group.proxy_rewards;
    const auto& p = group.normalized_probs;
    require_same_size(r.size(), p.size(), "shape_soft");
    require(tau > 0.0, "shape_soft: tau must be > 0");
    std::vector<SnisSample> samples(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (!(p[k] > 0.0)) throw std::invalid_argument("shape_soft: zero normalized probability");
        samples[k] = {r[k], p[k], p[k]};
    }
    const auto w = snis_weights(samples, delta_scaled, tau);
    const double G = static_cast<double>(r.size());
    std::vector<double> shaped(r);
    for (std::size_t k = 0; k < r.size(); ++k) shaped[k] += delta_scaled * G * w[k] * p[k];
    return shaped;
}

/// Subtract delta from the lowest-index most probable response in the group.
inline std::vector<double> shape_dro(const RolloutGroup& group, double delta_scaled) {
    require_same_size(group.proxy_rewards.size(), group.normalized_probs.size(), "shape_dro");
    std::vector<double> shaped(group.proxy_rewards);
    shaped[argmax_lowest(group.normalized_probs)] -= delta_scaled;
    return shaped;
}

struct SurrogateResult {
    double loss = 0.0;
    std::vector<double> gradient;  ///< ascent direction, shape prompts x responses
};

/// Mean over completions of min(rho A, clip(rho, 1 - eps, 1 + eps) A) and its logit gradient.
/// Refreshes each group's ratios from the current policy.
inline SurrogateResult clipped_surrogate(std::vector<RolloutGroup>& groups, const TabularSoftmaxPolicy& policy,
                                         double eps_clip) {
    require(eps_clip > 0.0 && eps_clip < 1.0, "clipped_surrogate: eps_clip must lie in (0, 1)");
    const std::size_t n = policy.responses();
    SurrogateResult out;
    out.gradient.assign(policy.prompts() * n, 0.0);
    std::size_t count = 0;
    for (auto& g : groups) count += g.size();
    if (count == 0) return out;
    const double scale = 1.0 / static_cast<double>(count);

    for (auto& g : groups) {
        const auto log_pi = policy.log_probs(g.prompt_index);
        std::vector<double> pi(n);
        for (std::size_t i = 0; i < n; ++i) pi[i] = std::exp(log_pi[i]);
        g.ratios.resize(g.size());
        double* row = out.gradient.data() + g.prompt_index * n;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Index y = g.response_indices[k];
            const double rho = std::exp(log_pi[y] - g.log_rollout_probs[k]);
            g.ratios[k] = rho;
            const double A = g.advantages[k];
            const double unclipped = rho * A;
            const double clipped = std::clamp(rho, 1.0 - eps_clip, 1.0 + eps_clip) * A;
            out.loss += scale * std::min(unclipped, clipped);
            if (unclipped <= clipped) {
                // d rho / d theta = rho * (e_y - pi)
                const double c = scale * A * rho;
                for (std::size_t i = 0; i < n; ++i) row[i] -= c * pi[i];
                row[y] += c;
            }
        }
    }
    return out;
}

enum class Method { GRPO, DRO, DRRO_hard, DRRO_soft, DRRO_soft_dynamic, EnsembleMean, EnsembleUWO };

inline const std::vector<std::pair<Method, std::string>>& method_names() {
    static const std::vector<std::pair<Method, std::string>> names{
        {Method::GRPO, "GRPO"},
        {Method::DRO, "DRO"},
        {Method::DRRO_hard, "DRRO_hard"},
        {Method::DRRO_soft, "DRRO_soft"},
        {Method::DRRO_soft_dynamic, "DRRO_soft_dynamic"},
        {Method::EnsembleMean, "EnsembleMean"},
        {Method::EnsembleUWO, "EnsembleUWO"},
    };
    return names;
}

inline std::string to_string(Method m) {
    for (const auto& [k, v] : method_names())
        if (k == m) return v;
    return "unknown";
}

inline Method parse_method(const std::string& name) {
    for (const auto& [k, v] : method_names())
        if (v == name) return k;
    throw std::invalid_argument("unknown method '" + name + "'");
}

inline bool uses_budget(Method m) {
    return m == Method::DRO || m == Method::DRRO_hard || m == Method::DRRO_soft || m == Method::DRRO_soft_dynamic;
}

struct TrainConfig {
    Method method = Method::GRPO;
    std::size_t outer_iterations = 300;
    std::size_t prompt_batch = 16;
    std::size_t group_size = 16;
    double clip_radius = 0.2;
    std::size_t pg_steps = 1;
    double learning_rate = 64.0;  ///< applied to the mean-over-completions surrogate gradient
    double tau = 2.0;
    BudgetConfig budget;
    double adv_epsilon = 1e-6;
    double uwo_lambda = 1.0;
    std::uint64_t seed = 0;
    std::size_t eval_interval = 5;

    bool operator==(const TrainConfig&) const = default;
};

inline void validate(const TrainConfig& c) {
    require(c.clip_radius > 0.0 && c.clip_radius < 1.0, "TrainConfig: clip_radius must lie in (0, 1)");
    require(c.group_size >= 2, "TrainConfig: group_size must be >= 2");
    require(c.prompt_batch >= 1 && c.pg_steps >= 1 && c.eval_interval >= 1, "TrainConfig: counts must be >= 1");
    require(c.learning_rate > 0.0 && std::isfinite(c.learning_rate), "TrainConfig: learning_rate must be > 0");
    require(c.tau > 0.0, "TrainConfig: tau must be > 0");
    require(c.adv_epsilon >= 0.0, "TrainConfig: adv_epsilon must be >= 0");
    require(c.uwo_lambda >= 0.0, "TrainConfig: uwo_lambda must be >= 0");
    require(c.budget.base >= 0.0 && c.budget.alpha >= 0.0, "TrainConfig: budget base and alpha must be >= 0");
    require(c.budget.window >= 1, "TrainConfig: budget window must be >= 1");
}

/// Running per-member mean/variance (all history) for ensemble z-scoring.
class MemberCalibration {
  public:
    explicit MemberCalibration(std::size_t members) : count_(members, 0), mean_(members, 0.0), m2_(members, 0.0) {}
    void observe(std::size_t j, double v) {
        ++count_[j];
        const double d = v - mean_[j];
        mean_[j] += d / static_cast<double>(count_[j]);
        m2_[j] += d * (v - mean_[j]);
    }
    double z(std::size_t j, double v) const {
        const double var = count_[j] > 0 ? m2_[j] / static_cast<double>(count_[j]) : 0.0;
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        return (v - mean_[j]) / sd;
    }

  private:
    std::vector<std::size_t> count_;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Grouped clipped-surrogate training on the proxy (or ensemble) reward; logs exact evaluations.
inline std::vector<RunLog> run_training(const SyntheticEnvironment& env, const TrainConfig& config) {
    validate(config);
    const std::size_t M = env.prompts();
    const std::size_t n = env.responses();
    const std::size_t G = config.group_size;
    require(env.initial.prompts() == M && env.initial.responses() == n, "run_training: environment is inconsistent");
    if (G > n) throw std::invalid_argument("run_training: group_size exceeds the number of responses");
    const bool ensemble = config.method == Method::EnsembleMean || config.method == Method::EnsembleUWO;
    if (ensemble) require(env.ensemble.size() >= 2, "run_training: ensemble methods need >= 2 members");

    BudgetConfig budget = config.budget;
    if (config.method == Method::DRRO_soft_dynamic) budget.mode = BudgetMode::dynamic;

    const std::string method = to_string(config.method);
    TabularSoftmaxPolicy policy = env.initial;
    const TabularSoftmaxPolicy& reference = env.initial;
    std::vector<std::vector<double>> ref_log_probs(M);
    for (std::size_t x = 0; x < M; ++x) ref_log_probs[x] = reference.log_probs(x);

    Rng rng = Rng(config.seed).split("train");
    KlSmoother smoother(budget.window);
    MemberCalibration calibration(env.ensemble.size());

    const auto base_eval = evaluate(policy, env, reference);
    double last_budget = uses_budget(config.method) ? dynamic_budget(budget, 0.0) : 0.0;
    std::vector<RunLog> logs;
    auto log_row = [&](std::size_t step) {
        const auto e = step == 0 ? base_eval : evaluate(policy, env, reference);
        logs.push_back({step, e.kl_seq, e.proxy_raw, e.gold_raw, e.proxy_raw - base_eval.proxy_raw,
                        e.gold_raw - base_eval.gold_raw, last_budget, method, config.seed});
    };
    log_row(0);

    std::vector<RolloutGroup> groups(config.prompt_batch);
    std::vector<double> group_kl(config.prompt_batch);
    for (std::size_t m = 1; m <= config.outer_iterations; ++m) {
        double kl_batch = 0.0;
        for (std::size_t b = 0; b < groups.size(); ++b) {
            auto& g = groups[b];
            const Index x = rng.index(M);
            const auto log_pi = policy.log_probs(x);
            std::vector<double> pi(n);
            for (std::size_t i = 0; i < n; ++i) pi[i] = std::exp(log_pi[i]);
            g.prompt_index = x;
            g.response_indices.resize(G);
            g.proxy_rewards.resize(G);
            g.rollout_probs.resize(G);
            g.log_rollout_probs.resize(G);
            std::vector<double> log_ref(G);
            for (std::size_t k = 0; k < G; ++k) {
                const Index y = rng.categorical(pi);
                g.response_indices[k] = y;
                g.proxy_rewards[k] = env.proxy[x][y];
                g.rollout_probs[k] = pi[y];
                g.log_rollout_probs[k] = log_pi[y];
                log_ref[k] = ref_log_probs[x][y];
            }
            g.normalized_probs = group_normalize_log(g.log_rollout_probs);
            group_kl[b] = k3_kl(log_ref, g.log_rollout_probs);
            g.ratios.assign(G, 1.0);
            g.shaped_rewards.assign(G, 0.0);
            kl_batch += group_kl[b];
        }
        const double smoothed_kl = smoother.push(kl_batch / static_cast<double>(groups.size()));

        if (ensemble) {
            for (const auto& g : groups)
                for (std::size_t j = 0; j < env.ensemble.size(); ++j)
                    for (Index y : g.response_indices) calibration.observe(j, env.ensemble[j][g.prompt_index][y]);
        }

        double budget_sum = 0.0;
        for (std::size_t b = 0; b < groups.size(); ++b) {
            auto& g = groups[b];
            const double delta = dynamic_budget(budget, budget.per_prompt ? group_kl[b] : smoothed_kl);
            budget_sum += delta;
            switch (config.method) {
                case Method::GRPO: g.shaped_rewards = g.proxy_rewards; break;
                case Method::DRO: g.shaped_rewards = shape_dro(g, delta); break;
                case Method::DRRO_hard: g.shaped_rewards = shape_hard(g, delta); break;
                case Method::DRRO_soft:
                case Method::DRRO_soft_dynamic: g.shaped_rewards = shape_soft(g, delta, config.tau); break;
                case Method::EnsembleMean:
                case Method::EnsembleUWO: {
                    const double E = static_cast<double>(env.ensemble.size());
                    for (std::size_t k = 0; k < G; ++k) {
                        const Index y = g.response_indices[k];
                        double mean = 0.0, sq = 0.0;
                        for (std::size_t j = 0; j < env.ensemble.size(); ++j) {
                            const double z = calibration.z(j, env.ensemble[j][g.prompt_index][y]);
                            mean += z;
                            sq += z * z;
                        }
                        mean /= E;
                        const double var = std::max(0.0, sq / E - mean * mean);
                        g.shaped_rewards[k] = config.method == Method::EnsembleMean ? mean : mean - config.uwo_lambda * var;
                    }
                    break;
                }
            }
            g.advantages = grpo_advantages(g.shaped_rewards, config.adv_epsilon);
        }
        if (uses_budget(config.method)) last_budget = budget_sum / static_cast<double>(groups.size());

        for (std::size_t s = 0; s < config.pg_steps; ++s) {
            const auto step = clipped_surrogate(groups, policy, config.clip_radius);
            auto& theta = policy.all_logits();
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += config.learning_rate * step.gradient[i];
        }

        if (m % config.eval_interval == 0 || m == config.outer_iterations) log_row(m);
    }
    return logs;
}

}  // namespace drro
