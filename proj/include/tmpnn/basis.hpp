#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tmpnn/matrix.hpp"

namespace tmpnn {

/// Number of monomials of degree at most `order` in `dim` variables,
/// i.e. sum over q = 0..order of C(dim - 1 + q, dim - 1).
std::size_t basis_size(std::size_t dim, std::size_t order);

/// All distinct monomials of total degree <= order in `dim` variables.
///
/// This is the reduced form of the Kronecker powers Z^[0..k]: z1*z2 and z2*z1
/// collapse into one entry. Ordering is graded (total degree ascending) and,
/// within a degree, lexicographic with higher exponents on earlier variables
/// first. For dim = 2, order = 2 this gives 1, z1, z2, z1^2, z1*z2, z2^2.
/// The ordering is part of the model file contract.
///
/// Every monomial of degree >= 1 is stored as `parent * z[factor]`, where the
/// parent has one degree less and therefore a smaller index. The batched
/// evaluation and backpropagation walk this chain.
class MonomialBasis {
public:
    MonomialBasis(std::size_t dim, std::size_t order);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t order() const noexcept { return order_; }
    std::size_t size() const noexcept { return degree_.size(); }

    std::span<const std::uint16_t> exponents(std::size_t i) const noexcept {
        return {exponents_.data() + i * dim_, dim_};
    }
    std::size_t degree(std::size_t i) const noexcept { return degree_[i]; }
    /// Index of the first monomial of total degree q; `degree_begin(order+1) == size()`.
    std::size_t degree_begin(std::size_t q) const noexcept { return degree_start_[q]; }

    // Recurrence: monomial(i) = monomial(parent(i)) * z[factor(i)], for i >= 1.
    std::size_t parent(std::size_t i) const noexcept { return parent_[i]; }
    std::size_t factor(std::size_t i) const noexcept { return factor_[i]; }

    std::optional<std::size_t> index_of(std::span<const std::uint16_t> exps) const;

    friend bool operator==(const MonomialBasis& a, const MonomialBasis& b) {
        return a.dim_ == b.dim_ && a.order_ == b.order_ && a.exponents_ == b.exponents_;
    }

private:
    std::size_t dim_;
    std::size_t order_;
    std::vector<std::uint16_t> exponents_;  // size() x dim_, row-major
    std::vector<std::size_t> degree_;
    std::vector<std::size_t> degree_start_;
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> factor_;
};

MonomialBasis build_basis(std::size_t dim, std::size_t order);

/// Values of every basis monomial at z; entry 0 is always 1.
std::vector<double> eval_monomials(const MonomialBasis& basis, std::span<const double> z);

/// size() x dim matrix of partial derivatives d monomial_i / d z_j.
Matrix eval_monomial_jacobian(const MonomialBasis& basis, std::span<const double> z);

}  // namespace tmpnn
