#pragma once

/// Per-prompt softmax policy over a finite response set.

#include <span>
#include <vector>

#include "drro/core.hpp"

namespace drro {

class TabularSoftmaxPolicy {
  public:
    TabularSoftmaxPolicy() = default;
    TabularSoftmaxPolicy(std::size_t prompts, std::size_t responses)
        : prompts_(prompts), responses_(responses), logits_(prompts * responses, 0.0) {
        require(prompts >= 1 && responses >= 1, "TabularSoftmaxPolicy: dimensions must be >= 1");
    }
    TabularSoftmaxPolicy(std::size_t prompts, std::size_t responses, std::vector<double> logits)
        : prompts_(prompts), responses_(responses), logits_(std::move(logits)) {
        require(prompts >= 1 && responses >= 1, "TabularSoftmaxPolicy: dimensions must be >= 1");
        require_same_size(logits_.size(), prompts * responses, "TabularSoftmaxPolicy");
        for (double v : logits_) require(std::isfinite(v), "TabularSoftmaxPolicy: logits must be finite");
    }

    std::size_t prompts() const noexcept { return prompts_; }
    std::size_t responses() const noexcept { return responses_; }

    std::span<const double> logits(Index x) const { return {logits_.data() + row(x), responses_}; }
    std::span<double> logits(Index x) { return {logits_.data() + row(x), responses_}; }
    const std::vector<double>& all_logits() const noexcept { return logits_; }
    std::vector<double>& all_logits() noexcept { return logits_; }

    std::vector<double> probs(Index x) const { return softmax(logits(x)); }
    std::vector<double> log_probs(Index x) const { return log_softmax(logits(x)); }
    PolicyVector policy(Index x) const { return PolicyVector(probs(x), 1e-9); }

    bool operator==(const TabularSoftmaxPolicy&) const = default;

  private:
    std::size_t row(Index x) const {
        if (x >= prompts_) throw std::out_of_range("TabularSoftmaxPolicy: prompt index out of range");
        return x * responses_;
    }

    std::size_t prompts_ = 0;
    std::size_t responses_ = 0;
    std::vector<double> logits_;
};

}  // namespace drro
