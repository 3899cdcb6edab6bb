#include "tmpnn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmpnn/error.hpp"

namespace tmpnn {

AdamaxState::AdamaxState(std::size_t parameter_count, AdamaxOptions options)
    : options_(options), first_moment_(parameter_count, 0.0), inf_norm_(parameter_count, 0.0) {
    if (!(options.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (!(options.beta1 >= 0.0 && options.beta1 < 1.0) || !(options.beta2 >= 0.0 && options.beta2 < 1.0))
        throw InvalidArgument("Adamax betas must lie in [0, 1)");
    if (!(options.epsilon >= 0.0)) throw InvalidArgument("Adamax epsilon must be non-negative");
}

void AdamaxState::step(std::span<double> params, std::span<const double> gradient, double lr_scale) {
    if (params.size() != first_moment_.size() || gradient.size() != first_moment_.size())
        throw InvalidArgument("Adamax step: expected " + std::to_string(first_moment_.size()) +
                              " parameters and gradient entries");
    for (std::size_t i = 0; i < gradient.size(); ++i)
        if (!std::isfinite(gradient[i]))
            throw NumericDomainError("non-finite gradient entry at index " + std::to_string(i));

    ++step_count_;
    const double b1 = options_.beta1;
    const double bias = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    const double rate = lr_scale * options_.learning_rate / bias;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = gradient[i];
        first_moment_[i] = b1 * first_moment_[i] + (1.0 - b1) * g;
        inf_norm_[i] = std::max(options_.beta2 * inf_norm_[i], std::abs(g));
        const double denom = inf_norm_[i] + options_.epsilon;
        // With eps = 0 and a parameter that never saw a gradient, m is 0 too.
        if (denom > 0.0) params[i] -= rate * first_moment_[i] / denom;
    }
}

double l2_norm(std::span<const double> v) {
    // Scaled accumulation so long gradients near overflow still clip.
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    double sum = 0.0;
    for (double x : v) sum += (x / scale) * (x / scale);
    return scale * std::sqrt(sum);
}

std::vector<double> clip_gradient(std::vector<double> gradient, double max_norm) {
    if (!(max_norm > 0.0)) throw InvalidArgument("clip max_norm must be positive");
    const double norm = l2_norm(gradient);
    if (norm > max_norm) {
        const double factor = max_norm / norm;
        for (double& g : gradient) g *= factor;
    }
    return gradient;
}

}  // namespace tmpnn
