#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "tmpnn/basis.hpp"
#include "tmpnn/matrix.hpp"

namespace tmpnn {

/// Weights of one order-k Taylor map  Z' = W_0 + W_1 Z + ... + W_k Z^[k].
///
/// Stored as a single dense (basis size x dim) matrix over the reduced
/// monomial basis: column j collects every coefficient feeding output j and
/// row i belongs to monomial i. The W_q blocks are the rows whose monomial has
/// total degree q; row 0 is the constant term W_0.
class TaylorMapWeights {
public:
    /// All-zero map.
    TaylorMapWeights(std::size_t dim, std::size_t order);

    std::size_t dim() const noexcept { return basis_->dim(); }
    std::size_t order() const noexcept { return basis_->order(); }
    std::size_t parameter_count() const noexcept { return coefficients_.size(); }

    const MonomialBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const MonomialBasis> shared_basis() const noexcept { return basis_; }

    Matrix& coefficients() noexcept { return coefficients_; }
    const Matrix& coefficients() const noexcept { return coefficients_; }

    friend bool operator==(const TaylorMapWeights& a, const TaylorMapWeights& b) {
        return a.coefficients_ == b.coefficients_ && *a.basis_ == *b.basis_;
    }

private:
    std::shared_ptr<const MonomialBasis> basis_;
    Matrix coefficients_;
};

/// W_1 = I, every other block zero: the map returns its input unchanged.
TaylorMapWeights identity_weights(std::size_t dim, std::size_t order);

/// One application of the map. Throws DivergenceError carrying `z` when the
/// output is not finite.
std::vector<double> apply(const TaylorMapWeights& weights, std::span<const double> z);

struct MapDerivatives {
    std::vector<double> output;
    /// d output_j / d z_l, dim x dim.
    Matrix d_out_d_z;
    /// Output j depends on coefficient (i, j) only, with sensitivity
    /// monomial_i(z); coefficients (i, j') with j' != j do not affect it.
    std::vector<double> weight_sensitivity;
};

MapDerivatives apply_with_grads(const TaylorMapWeights& weights, std::span<const double> z);

// Batched passes over a block of samples in structure-of-arrays layout: a
// state block is a (dim x count) matrix whose row j holds variable j of every
// sample, a monomial block is (basis size x count).

/// phi.row(i) = monomial_i over the block. `phi` is resized as needed.
void eval_monomials_block(const MonomialBasis& basis, const Matrix& z, Matrix& phi);

/// out = W^T phi for every sample. Does not check finiteness.
void apply_block(const TaylorMapWeights& weights, const Matrix& phi, Matrix& out);

/// Reverse pass of one map application.
///
/// Given the layer input `z`, its monomials `phi` and the loss sensitivity
/// `g_out` of the layer output, writes d loss / d z into `g_z` and adds
/// d loss / d W into `grad_w` (same shape as the coefficients). `g_phi` is
/// scratch space.
void backprop_block(const TaylorMapWeights& weights, const Matrix& z, const Matrix& phi,
                    const Matrix& g_out, Matrix& g_z, Matrix& grad_w, Matrix& g_phi);

}  // namespace tmpnn
