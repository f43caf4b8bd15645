#pragma once

/// Shared value types and small numeric helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drro {

using Index = std::size_t;

/// Absolute tolerance used for simplex membership and identity checks.
inline constexpr double kTolerance = 1e-10;

class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
}

/// Finite reward values for one prompt.
class RewardVector {
  public:
    RewardVector() = default;
    explicit RewardVector(std::vector<double> values) : values_(std::move(values)) {
        require(!values_.empty(), "RewardVector: needs at least one entry");
        for (double v : values_) require(std::isfinite(v), "RewardVector: entries must be finite");
    }
    RewardVector(std::initializer_list<double> values) : RewardVector(std::vector<double>(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](Index i) const { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::span<const double> span() const noexcept { return values_; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    bool operator==(const RewardVector&) const = default;

  private:
    std::vector<double> values_;
};

/// A point of the probability simplex.
class PolicyVector {
  public:
    PolicyVector() = default;
    explicit PolicyVector(std::vector<double> probs, double tolerance = kTolerance)
        : probs_(std::move(probs)) {
        require(!probs_.empty(), "PolicyVector: needs at least one entry");
        double total = 0.0;
        for (double p : probs_) {
            require(std::isfinite(p) && p >= 0.0, "PolicyVector: probabilities must be finite and >= 0");
            total += p;
        }
        require(std::abs(total - 1.0) <= tolerance, "PolicyVector: probabilities must sum to 1");
    }
    PolicyVector(std::initializer_list<double> probs) : PolicyVector(std::vector<double>(probs)) {}

    static PolicyVector uniform(std::size_t n) {
        require(n >= 1, "PolicyVector::uniform: n must be >= 1");
        return PolicyVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }
    static PolicyVector vertex(std::size_t n, Index k) {
        require(k < n, "PolicyVector::vertex: index out of range");
        std::vector<double> p(n, 0.0);
        p[k] = 1.0;
        return PolicyVector(std::move(p));
    }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](Index i) const { return probs_[i]; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    std::span<const double> span() const noexcept { return probs_; }
    auto begin() const noexcept { return probs_.begin(); }
    auto end() const noexcept { return probs_.end(); }

    bool operator==(const PolicyVector&) const = default;

  private:
    std::vector<double> probs_;
};

/// Nonnegative l1 reward-mass budget.
class AmbiguityBudget {
  public:
    AmbiguityBudget(double delta) : delta_(delta) {  // NOLINT(google-explicit-constructor)
        require(std::isfinite(delta) && delta >= 0.0, "AmbiguityBudget: delta must be finite and >= 0");
    }
    double value() const noexcept { return delta_; }
    operator double() const noexcept { return delta_; }  // NOLINT(google-explicit-constructor)

  private:
    double delta_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Lowest index attaining the maximum.
inline Index argmax_lowest(std::span<const double> v) {
    require(!v.empty(), "argmax_lowest: empty input");
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline double max_value(std::span<const double> v) { return v[argmax_lowest(v)]; }

/// log(sum(exp(v))) in max-shifted form.
inline double log_sum_exp(std::span<const double> v) {
    require(!v.empty(), "log_sum_exp: empty input");
    const double m = max_value(v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline std::vector<double> softmax(std::span<const double> logits) {
    const double lse = log_sum_exp(logits);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i] - lse);
    return out;
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
    const double lse = log_sum_exp(logits);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

/// Exact KL(p || q) for tabular distributions; requires q > 0 wherever p > 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    require_same_size(p.size(), q.size(), "kl_divergence");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        require(q[i] > 0.0, "kl_divergence: support violation");
        kl += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
    return std::max(kl, 0.0);
}

}  // namespace drro
