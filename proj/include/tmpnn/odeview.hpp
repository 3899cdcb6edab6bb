#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tmpnn/basis.hpp"
#include "tmpnn/model.hpp"
#include "tmpnn/taylor_map.hpp"

namespace tmpnn {

/// Polynomial vector field dZ/dtau = A_0 + A_1 Z + A_2 Z^[2] + ... on tau in [0, 1].
///
/// A Taylor map with p steps is the explicit Euler discretization of this
/// field with step 1/p, so A_q = p W_q for q != 1 and A_1 = p (W_1 - I).
/// Coefficients share the reduced basis and layout of TaylorMapWeights.
///
/// Coefficients are kept in extended precision so that converting weights to
/// a field and back at the same step count reproduces the weights bit for bit.
class OdeSystem {
public:
    OdeSystem(std::shared_ptr<const MonomialBasis> basis);

    std::size_t dim() const noexcept { return basis_->dim(); }
    std::size_t order() const noexcept { return basis_->order(); }
    const MonomialBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const MonomialBasis> shared_basis() const noexcept { return basis_; }

    long double coefficient(std::size_t monomial, std::size_t output) const noexcept {
        return coefficients_[monomial * dim() + output];
    }
    long double& coefficient(std::size_t monomial, std::size_t output) noexcept {
        return coefficients_[monomial * dim() + output];
    }
    /// Coefficients rounded to double, (basis size x dim).
    Matrix coefficient_matrix() const;

    /// Right-hand side evaluated at z.
    std::vector<double> rate(std::span<const double> z) const;

    friend bool operator==(const OdeSystem& a, const OdeSystem& b) {
        return a.coefficients_ == b.coefficients_ && *a.basis_ == *b.basis_;
    }

private:
    std::shared_ptr<const MonomialBasis> basis_;
    std::vector<long double> coefficients_;
};

OdeSystem extract_ode(const TaylorMapWeights& weights, std::size_t steps);
OdeSystem extract_ode(const TmpnnModel& model);

/// Euler map with `steps` steps: W_q = A_q / steps (q != 1), W_1 = I + A_1 / steps.
TaylorMapWeights rebuild_map(const OdeSystem& ode, std::size_t steps);

/// Same field, more steps: W'_q = p W_q / p', W'_1 = p W_1 / p' + (p' - p) I / p'.
/// The polynomial order of the network grows to k^p'.
TmpnnModel raise_order(const TmpnnModel& model, std::size_t new_steps);

/// Changes the integration horizon: W'_q = W_q tau (q != 1), W'_1 = (W_1 - I) tau + I.
TmpnnModel rescale_time(const TmpnnModel& model, double tau_bar);

/// Classical fixed-step RK4 from z0 over [0, horizon].
/// Throws DivergenceError when the trajectory leaves the finite range.
std::vector<double> integrate_reference(const OdeSystem& ode, std::span<const double> z0,
                                        std::size_t n_steps = 1000, double horizon = 1.0);

struct RenderOptions {
    double threshold = 1e-10;
    int significant_digits = 9;
};

/// One line per state variable, "d<name>/dτ = <terms>", in basis order.
std::string render_ode(const OdeSystem& ode, std::span<const std::string> names, const RenderOptions& options = {});

/// x1.., y1.. and h1.. names of the state of `model` unless feature/target
/// names are given.
std::vector<std::string> state_names(const TmpnnModel& model, std::span<const std::string> feature_names = {},
                                     std::span<const std::string> target_names = {});

}  // namespace tmpnn
