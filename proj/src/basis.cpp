#include "tmpnn/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tmpnn/error.hpp"

namespace tmpnn {
namespace {

std::size_t binomial(std::size_t n, std::size_t k) {
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        // r * (n - k + i) is divisible by i at every step.
        r = r * (n - k + i) / i;
    }
    return r;
}

// Appends all exponent vectors of `dim` entries summing to `degree`, earlier
// variables taking the larger share first.
void enumerate_degree(std::size_t dim, std::size_t degree, std::vector<std::uint16_t>& current,
                      std::size_t var, std::vector<std::uint16_t>& out) {
    if (var + 1 == dim) {
        current[var] = static_cast<std::uint16_t>(degree);
        out.insert(out.end(), current.begin(), current.end());
        return;
    }
    for (std::size_t e = degree + 1; e-- > 0;) {
        current[var] = static_cast<std::uint16_t>(e);
        enumerate_degree(dim, degree - e, current, var + 1, out);
    }
}

void check_input(std::span<const double> z, std::size_t dim) {
    if (z.size() != dim)
        throw DimensionError("monomial evaluation expects " + std::to_string(dim) +
                             " values, got " + std::to_string(z.size()));
    for (std::size_t j = 0; j < z.size(); ++j)
        if (!std::isfinite(z[j]))
            throw NumericDomainError("non-finite state entry at index " + std::to_string(j));
}

double ipow(double x, unsigned e) {
    double r = 1.0;
    while (e-- > 0) r *= x;
    return r;
}

}  // namespace

std::size_t basis_size(std::size_t dim, std::size_t order) {
    if (dim == 0 || order == 0) throw InvalidArgument("basis dimension and order must be >= 1");
    // sum_{q=0}^{k} C(d-1+q, d-1) = C(d+k, d)
    return binomial(dim + order, dim);
}

MonomialBasis::MonomialBasis(std::size_t dim, std::size_t order) : dim_(dim), order_(order) {
    if (dim == 0) throw InvalidArgument("basis dimension must be >= 1");
    if (order == 0) throw InvalidArgument("basis order must be >= 1");
    if (order > std::numeric_limits<std::uint16_t>::max())
        throw InvalidArgument("basis order too large");

    const std::size_t n = basis_size(dim, order);
    exponents_.reserve(n * dim);
    degree_start_.reserve(order + 2);
    std::vector<std::uint16_t> current(dim, 0);
    for (std::size_t q = 0; q <= order; ++q) {
        degree_start_.push_back(exponents_.size() / dim);
        enumerate_degree(dim, q, current, 0, exponents_);
    }
    degree_start_.push_back(exponents_.size() / dim);

    degree_.resize(n);
    parent_.assign(n, 0);
    factor_.assign(n, 0);
    for (std::size_t q = 0; q <= order; ++q)
        for (std::size_t i = degree_start_[q]; i < degree_start_[q + 1]; ++i) degree_[i] = q;

    std::vector<std::uint16_t> reduced(dim);
    for (std::size_t i = 1; i < n; ++i) {
        auto e = exponents(i);
        const auto first = static_cast<std::size_t>(
            std::find_if(e.begin(), e.end(), [](auto v) { return v != 0; }) - e.begin());
        std::copy(e.begin(), e.end(), reduced.begin());
        --reduced[first];
        factor_[i] = first;
        parent_[i] = *index_of(reduced);
    }
}

std::optional<std::size_t> MonomialBasis::index_of(std::span<const std::uint16_t> exps) const {
    if (exps.size() != dim_) return std::nullopt;
    std::size_t q = 0;
    for (auto v : exps) q += v;
    if (q > order_) return std::nullopt;
    // Within a degree block entries are sorted descending lexicographically.
    auto cmp_desc = [this, exps](std::size_t idx) {
        auto e = exponents(idx);
        return std::lexicographical_compare(exps.begin(), exps.end(), e.begin(), e.end());
    };
    std::size_t lo = degree_start_[q];
    std::size_t hi = degree_start_[q + 1];
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (cmp_desc(mid))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < degree_start_[q + 1]) {
        auto e = exponents(lo);
        if (std::equal(e.begin(), e.end(), exps.begin())) return lo;
    }
    return std::nullopt;
}

MonomialBasis build_basis(std::size_t dim, std::size_t order) { return MonomialBasis(dim, order); }

std::vector<double> eval_monomials(const MonomialBasis& basis, std::span<const double> z) {
    check_input(z, basis.dim());
    std::vector<double> out(basis.size());
    out[0] = 1.0;
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = out[basis.parent(i)] * z[basis.factor(i)];
    return out;
}

Matrix eval_monomial_jacobian(const MonomialBasis& basis, std::span<const double> z) {
    check_input(z, basis.dim());
    const std::size_t d = basis.dim();
    Matrix jac(basis.size(), d);
    for (std::size_t i = 1; i < basis.size(); ++i) {
        auto e = basis.exponents(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (e[j] == 0) continue;
            double v = e[j] * ipow(z[j], e[j] - 1u);
            for (std::size_t r = 0; r < d; ++r)
                if (r != j) v *= ipow(z[r], e[r]);
            jac(i, j) = v;
        }
    }
    return jac;
}

}  // namespace tmpnn
