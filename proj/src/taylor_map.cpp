#include "tmpnn/taylor_map.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "tmpnn/error.hpp"
#include "tmpnn/simd.hpp"

namespace tmpnn {
namespace {

void resize_if_needed(Matrix& m, std::size_t rows, std::size_t cols) {
    if (m.rows() != rows || m.cols() != cols) m = Matrix(rows, cols);
}

}  // namespace

TaylorMapWeights::TaylorMapWeights(std::size_t dim, std::size_t order)
    : basis_(std::make_shared<const MonomialBasis>(dim, order)),
      coefficients_(basis_->size(), dim) {}

TaylorMapWeights identity_weights(std::size_t dim, std::size_t order) {
    TaylorMapWeights w(dim, order);
    // Degree-1 rows are 1..dim, with row 1 + j holding monomial z_j.
    for (std::size_t j = 0; j < dim; ++j) w.coefficients()(1 + j, j) = 1.0;
    return w;
}

std::vector<double> apply(const TaylorMapWeights& weights, std::span<const double> z) {
    const std::vector<double> phi = eval_monomials(weights.basis(), z);
    const Matrix& w = weights.coefficients();
    std::vector<double> out(weights.dim(), 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        auto row = w.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::fma(row[j], phi[i], out[j]);
    }
    for (double v : out)
        if (!std::isfinite(v)) throw DivergenceError({z.begin(), z.end()});
    return out;
}

MapDerivatives apply_with_grads(const TaylorMapWeights& weights, std::span<const double> z) {
    MapDerivatives r;
    r.output = tmpnn::apply(weights, z);
    r.weight_sensitivity = eval_monomials(weights.basis(), z);
    const Matrix jac = eval_monomial_jacobian(weights.basis(), z);
    const Matrix& w = weights.coefficients();
    const std::size_t d = weights.dim();
    r.d_out_d_z = Matrix(d, d);
    for (std::size_t i = 0; i < jac.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double wij = w(i, j);
            if (wij == 0.0) continue;
            for (std::size_t l = 0; l < d; ++l) r.d_out_d_z(j, l) += wij * jac(i, l);
        }
    for (double v : r.d_out_d_z.values())
        if (!std::isfinite(v)) throw DivergenceError({z.begin(), z.end()});
    return r;
}

void eval_monomials_block(const MonomialBasis& basis, const Matrix& z, Matrix& phi) {
    if (z.rows() != basis.dim())
        throw DimensionError("state block has " + std::to_string(z.rows()) + " rows, basis expects " +
                             std::to_string(basis.dim()));
    const std::size_t count = z.cols();
    resize_if_needed(phi, basis.size(), count);
    std::fill(phi.row(0).begin(), phi.row(0).end(), 1.0);
    for (std::size_t i = 1; i < basis.size(); ++i)
        simd::mul(phi.row(basis.parent(i)), z.row(basis.factor(i)), phi.row(i));
}

void apply_block(const TaylorMapWeights& weights, const Matrix& phi, Matrix& out) {
    const Matrix& w = weights.coefficients();
    resize_if_needed(out, weights.dim(), phi.cols());
    std::fill(out.values().begin(), out.values().end(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const double wij = w(i, j);
            if (wij != 0.0) simd::axpy(wij, phi.row(i), out.row(j));
        }
}

void backprop_block(const TaylorMapWeights& weights, const Matrix& z, const Matrix& phi,
                    const Matrix& g_out, Matrix& g_z, Matrix& grad_w, Matrix& g_phi) {
    const MonomialBasis& basis = weights.basis();
    const Matrix& w = weights.coefficients();
    const std::size_t count = z.cols();
    const std::size_t d = weights.dim();
    resize_if_needed(g_phi, basis.size(), count);
    resize_if_needed(g_z, d, count);
    std::fill(g_z.values().begin(), g_z.values().end(), 0.0);

    for (std::size_t i = 0; i < basis.size(); ++i) {
        auto gp = g_phi.row(i);
        std::fill(gp.begin(), gp.end(), 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            grad_w(i, j) += simd::dot(phi.row(i), g_out.row(j));
            const double wij = w(i, j);
            if (wij != 0.0) simd::axpy(wij, g_out.row(j), gp);
        }
    }
    // Reverse walk of phi_i = phi_parent * z_factor; children always have
    // larger indices than their parents.
    for (std::size_t i = basis.size(); i-- > 1;) {
        const std::size_t parent = basis.parent(i);
        const std::size_t factor = basis.factor(i);
        simd::fma_acc(g_phi.row(i), phi.row(parent), g_z.row(factor));
        if (parent != 0) simd::fma_acc(g_phi.row(i), z.row(factor), g_phi.row(parent));
    }
}

}  // namespace tmpnn
