#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tmpnn {

struct AdamaxOptions {
    double learning_rate = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adamax: Adam with the second moment replaced by an exponentially weighted
/// infinity norm.
///
///   m <- beta1 m + (1 - beta1) g
///   u <- max(beta2 u, |g|)
///   theta <- theta - (lr / (1 - beta1^t)) m / (u + eps)
class AdamaxState {
public:
    AdamaxState(std::size_t parameter_count, AdamaxOptions options = {});

    const AdamaxOptions& options() const noexcept { return options_; }
    std::uint64_t step_count() const noexcept { return step_count_; }
    const std::vector<double>& first_moment() const noexcept { return first_moment_; }
    const std::vector<double>& inf_norm() const noexcept { return inf_norm_; }

    /// Applies one update in place. `lr_scale` multiplies the configured
    /// learning rate for this step only. Throws NumericDomainError on a
    /// non-finite gradient (state is left untouched).
    void step(std::span<double> params, std::span<const double> gradient, double lr_scale = 1.0);

private:
    AdamaxOptions options_;
    std::uint64_t step_count_ = 0;
    std::vector<double> first_moment_;
    std::vector<double> inf_norm_;
};

inline void adamax_step(AdamaxState& state, std::span<double> params, std::span<const double> gradient) {
    state.step(params, gradient);
}

double l2_norm(std::span<const double> v);

/// Rescales `gradient` to have Euclidean norm `max_norm` when it is longer.
std::vector<double> clip_gradient(std::vector<double> gradient, double max_norm);

}  // namespace tmpnn
