#include "tmpnn/odeview.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "tmpnn/error.hpp"

namespace tmpnn {
namespace {

bool is_linear_diagonal(const MonomialBasis& basis, std::size_t monomial, std::size_t output) {
    return basis.degree(monomial) == 1 && monomial == 1 + output;
}

std::string format_number(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string monomial_text(const MonomialBasis& basis, std::size_t i, std::span<const std::string> names) {
    std::string s;
    auto e = basis.exponents(i);
    for (std::size_t j = 0; j < e.size(); ++j) {
        if (e[j] == 0) continue;
        if (!s.empty()) s += '*';
        s += names[j];
        if (e[j] > 1) s += "^" + std::to_string(e[j]);
    }
    return s;
}

}  // namespace

OdeSystem::OdeSystem(std::shared_ptr<const MonomialBasis> basis)
    : basis_(std::move(basis)), coefficients_(basis_->size() * basis_->dim(), 0.0L) {}

Matrix OdeSystem::coefficient_matrix() const {
    Matrix m(basis_->size(), dim());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(coefficient(i, j));
    return m;
}

std::vector<double> OdeSystem::rate(std::span<const double> z) const {
    const std::vector<double> phi = eval_monomials(*basis_, z);
    std::vector<double> out(dim(), 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += static_cast<double>(coefficient(i, j)) * phi[i];
    return out;
}

OdeSystem extract_ode(const TaylorMapWeights& weights, std::size_t steps) {
    if (steps < 1) throw InvalidArgument("step count must be >= 1");
    OdeSystem ode(weights.shared_basis());
    const auto p = static_cast<long double>(steps);
    const Matrix& w = weights.coefficients();
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const long double wij = w(i, j);
            ode.coefficient(i, j) = is_linear_diagonal(weights.basis(), i, j) ? p * (wij - 1.0L) : p * wij;
        }
    return ode;
}

OdeSystem extract_ode(const TmpnnModel& model) { return extract_ode(model.map(), model.steps()); }

TaylorMapWeights rebuild_map(const OdeSystem& ode, std::size_t steps) {
    if (steps < 1) throw InvalidArgument("step count must be >= 1");
    TaylorMapWeights weights(ode.dim(), ode.order());
    const auto p = static_cast<long double>(steps);
    Matrix& w = weights.coefficients();
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const long double a = ode.coefficient(i, j) / p;
            w(i, j) = static_cast<double>(is_linear_diagonal(ode.basis(), i, j) ? a + 1.0L : a);
        }
    return weights;
}

TmpnnModel raise_order(const TmpnnModel& model, std::size_t new_steps) {
    if (new_steps <= model.steps())
        throw InvalidArgument("raise_order needs more steps than the current " + std::to_string(model.steps()));
    return model.with_map(rebuild_map(extract_ode(model), new_steps), new_steps);
}

TmpnnModel rescale_time(const TmpnnModel& model, double tau_bar) {
    if (!(tau_bar > 0.0) || !std::isfinite(tau_bar)) throw InvalidArgument("time horizon must be positive and finite");
    // Rescaling the horizon is rebuilding the field tau_bar * A with one step per unit.
    OdeSystem ode = extract_ode(model.map(), 1);
    TaylorMapWeights weights(model.state_dim(), model.order());
    const long double tau = tau_bar;
    Matrix& w = weights.coefficients();
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const long double a = ode.coefficient(i, j) * tau;
            w(i, j) = static_cast<double>(is_linear_diagonal(ode.basis(), i, j) ? a + 1.0L : a);
        }
    return model.with_map(std::move(weights), model.steps());
}

std::vector<double> integrate_reference(const OdeSystem& ode, std::span<const double> z0, std::size_t n_steps,
                                        double horizon) {
    if (n_steps < 1) throw InvalidArgument("integration needs at least one step");
    if (z0.size() != ode.dim()) throw DimensionError("initial state has the wrong dimension");
    const std::size_t d = ode.dim();
    const double h = horizon / static_cast<double>(n_steps);
    std::vector<double> z(z0.begin(), z0.end());
    std::vector<double> tmp(d);
    auto stage = [&](const std::vector<double>& k, double c) {
        for (std::size_t j = 0; j < d; ++j) tmp[j] = z[j] + c * h * k[j];
        return ode.rate(tmp);
    };
    for (std::size_t s = 0; s < n_steps; ++s) {
        std::vector<double> k1;
        try {
            k1 = ode.rate(z);
        } catch (const NumericDomainError&) {
            throw DivergenceError(z, s);
        }
        std::vector<double> k2, k3, k4;
        try {
            k2 = stage(k1, 0.5);
            k3 = stage(k2, 0.5);
            k4 = stage(k3, 1.0);
        } catch (const NumericDomainError&) {
            throw DivergenceError(z, s);
        }
        for (std::size_t j = 0; j < d; ++j) z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        for (double v : z)
            if (!std::isfinite(v)) throw DivergenceError(z, s);
    }
    return z;
}

std::string render_ode(const OdeSystem& ode, std::span<const std::string> names, const RenderOptions& options) {
    if (names.size() != ode.dim())
        throw InvalidArgument("render_ode needs " + std::to_string(ode.dim()) + " variable names");
    const MonomialBasis& basis = ode.basis();
    std::string text;
    for (std::size_t j = 0; j < ode.dim(); ++j) {
        std::string rhs;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const double c = static_cast<double>(ode.coefficient(i, j));
            if (!(std::abs(c) >= options.threshold)) continue;
            const std::string mono = monomial_text(basis, i, names);
            const std::string mag = format_number(std::abs(c), options.significant_digits);
            const std::string term = mono.empty() ? mag : mag + "*" + mono;
            if (rhs.empty())
                rhs = (c < 0 ? "-" : "") + term;
            else
                rhs += (c < 0 ? " - " : " + ") + term;
        }
        if (rhs.empty()) rhs = "0";
        text += "d" + names[j] + "/dτ = " + rhs + "\n";
    }
    return text;
}

std::vector<std::string> state_names(const TmpnnModel& model, std::span<const std::string> feature_names,
                                     std::span<const std::string> target_names) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < model.n_features(); ++j)
        names.push_back(feature_names.size() == model.n_features() ? feature_names[j] : "x" + std::to_string(j + 1));
    for (std::size_t j = 0; j < model.n_targets(); ++j)
        names.push_back(target_names.size() == model.n_targets() ? target_names[j] : "y" + std::to_string(j + 1));
    for (std::size_t j = 0; j < model.n_latent(); ++j) names.push_back("h" + std::to_string(j + 1));
    return names;
}

}  // namespace tmpnn
