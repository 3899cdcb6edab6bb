#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tmpnn/basis.hpp"
#include "tmpnn/error.hpp"

using namespace tmpnn;

namespace {

std::vector<int> exps_of(const MonomialBasis& b, std::size_t i) {
    auto e = b.exponents(i);
    return {e.begin(), e.end()};
}

}  // namespace

TEST_CASE("basis of two variables up to degree two") {
    const auto b = build_basis(2, 2);
    REQUIRE(b.size() == 6);
    const std::vector<std::vector<int>> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (std::size_t i = 0; i < 6; ++i) CHECK(exps_of(b, i) == expected[i]);
}

TEST_CASE("basis sizes") {
    CHECK(build_basis(2, 5).size() == 21);
    CHECK(build_basis(3, 3).size() == 20);
    CHECK(basis_size(2, 5) == 21);
    // dim = 1 is a plain power series.
    CHECK(build_basis(1, 4).size() == 5);
}

TEST_CASE("basis rejects zero dimension or order") {
    CHECK_THROWS_AS(build_basis(0, 2), InvalidArgument);
    CHECK_THROWS_AS(build_basis(2, 0), InvalidArgument);
}

TEST_CASE("basis matches brute-force enumeration and ordering rules") {
    for (std::size_t dim = 1; dim <= 6; ++dim)
        for (std::size_t order = 1; order <= 5; ++order) {
            CAPTURE(dim);
            CAPTURE(order);
            const auto b = build_basis(dim, order);
            auto brute = test::brute_force_exponents(dim, order);
            REQUIRE(b.size() == brute.size());

            // Same set.
            std::vector<std::vector<int>> ours;
            for (std::size_t i = 0; i < b.size(); ++i) ours.push_back(exps_of(b, i));
            auto sorted_ours = ours;
            std::sort(sorted_ours.begin(), sorted_ours.end());
            std::sort(brute.begin(), brute.end());
            CHECK(sorted_ours == brute);

            // Graded, then descending lexicographic inside a degree.
            for (std::size_t i = 1; i < ours.size(); ++i) {
                const int d0 = std::accumulate(ours[i - 1].begin(), ours[i - 1].end(), 0);
                const int d1 = std::accumulate(ours[i].begin(), ours[i].end(), 0);
                CHECK(d0 <= d1);
                if (d0 == d1) CHECK(ours[i - 1] > ours[i]);
            }
            // Parent chain and lookup are consistent.
            for (std::size_t i = 1; i < b.size(); ++i) {
                auto e = ours[i];
                --e[b.factor(i)];
                CHECK(exps_of(b, b.parent(i)) == e);
                CHECK(b.parent(i) < i);
                CHECK(b.index_of(b.exponents(i)) == i);
            }
            CHECK(build_basis(dim, order) == b);
        }
}

TEST_CASE("eval_monomials hand values") {
    const auto b = build_basis(2, 2);
    CHECK(eval_monomials(b, std::vector<double>{2, 3}) == std::vector<double>{1, 2, 3, 4, 6, 9});
    CHECK(eval_monomials(b, std::vector<double>{0, 0}) == std::vector<double>{1, 0, 0, 0, 0, 0});
    const auto b3 = build_basis(3, 3);
    CHECK(eval_monomials(b3, std::vector<double>{1, 1, 1}) == std::vector<double>(20, 1.0));
}

TEST_CASE("eval_monomials rejects non-finite input and wrong length") {
    const auto b = build_basis(2, 2);
    CHECK_THROWS_AS(eval_monomials(b, std::vector<double>{1.0, std::nan("")}), NumericDomainError);
    CHECK_THROWS_AS(eval_monomials(b, std::vector<double>{1.0, INFINITY}), NumericDomainError);
    CHECK_THROWS_AS(eval_monomial_jacobian(b, std::vector<double>{NAN, 0.0}), NumericDomainError);
    CHECK_THROWS_AS(eval_monomials(b, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("reduced monomials agree with literal Kronecker powers") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (std::size_t dim = 1; dim <= 3; ++dim)
        for (std::size_t order = 1; order <= 3; ++order) {
            const auto b = build_basis(dim, order);
            std::vector<double> z(dim);
            for (double& v : z) v = u(rng);
            const auto reduced = eval_monomials(b, z);
            for (std::size_t q = 0; q <= order; ++q) {
                std::vector<double> values;
                std::vector<std::vector<int>> sigs;
                test::kronecker_power(z, q, values, sigs);
                for (std::size_t a = 0; a < values.size(); ++a) {
                    std::vector<std::uint16_t> key(sigs[a].begin(), sigs[a].end());
                    const auto idx = b.index_of(key);
                    REQUIRE(idx.has_value());
                    CHECK(reduced[*idx] == doctest::Approx(values[a]).epsilon(1e-14));
                }
            }
        }
}

TEST_CASE("monomial Jacobian hand values") {
    const auto b = build_basis(2, 2);
    const auto jac = eval_monomial_jacobian(b, std::vector<double>{2, 3});
    // Row 4 is z1*z2, row 3 is z1^2.
    CHECK(jac(4, 0) == 3.0);
    CHECK(jac(4, 1) == 2.0);
    CHECK(jac(3, 0) == 4.0);
    CHECK(jac(3, 1) == 0.0);
    CHECK(jac(0, 0) == 0.0);
    CHECK(jac(0, 1) == 0.0);
}

TEST_CASE("monomial Jacobian matches central finite differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_int_distribution<std::size_t> dim_pick(1, 4), order_pick(1, 4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto b = build_basis(dim_pick(rng), order_pick(rng));
        std::vector<double> z(b.dim());
        for (double& v : z) v = u(rng);
        const auto jac = eval_monomial_jacobian(b, z);
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = 0; j < b.dim(); ++j) {
                auto f = [&](const std::vector<double>& x) { return eval_monomials(b, x)[i]; };
                const double fd = test::central_difference(f, z, j, 1e-6);
                worst = std::max(worst, test::rel_error(jac(i, j), fd, 1e-3));
            }
    }
    CHECK(worst < 1e-7);
}
