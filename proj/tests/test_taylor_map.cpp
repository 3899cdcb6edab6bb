#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tmpnn/error.hpp"
#include "tmpnn/taylor_map.hpp"

using namespace tmpnn;

namespace {

TaylorMapWeights random_weights(std::mt19937_64& rng, std::size_t dim, std::size_t order, double spread) {
    TaylorMapWeights w = identity_weights(dim, order);
    std::normal_distribution<double> n(0.0, spread);
    for (double& c : w.coefficients().values()) c += n(rng);
    return w;
}

}  // namespace

TEST_CASE("identity map leaves the state alone") {
    const auto w = identity_weights(2, 2);
    CHECK(tmpnn::apply(w, std::vector<double>{5, -3}) == std::vector<double>{5, -3});
    const auto w3 = identity_weights(3, 1);
    REQUIRE(w3.coefficients().rows() == 4);
    REQUIRE(w3.coefficients().cols() == 3);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(w3.coefficients()(r, c) == (r == c + 1 ? 1.0 : 0.0));
}

TEST_CASE("two-variable fifth-order map stores 42 coefficients") {
    const auto w = identity_weights(2, 5);
    CHECK(w.parameter_count() == 42);
    std::size_t ones = 0, nonzero = 0;
    for (double c : w.coefficients().values()) {
        ones += c == 1.0;
        nonzero += c != 0.0;
    }
    CHECK(ones == 2);
    CHECK(nonzero == 2);
}

TEST_CASE("one-variable quadratic map hand value") {
    TaylorMapWeights w(1, 2);
    w.coefficients()(0, 0) = 1.0;
    w.coefficients()(1, 0) = 0.5;
    w.coefficients()(2, 0) = 0.25;
    CHECK(tmpnn::apply(w, std::vector<double>{2}) == std::vector<double>{3});
    const auto d = apply_with_grads(w, std::vector<double>{2});
    CHECK(d.output == std::vector<double>{3});
    CHECK(d.d_out_d_z(0, 0) == doctest::Approx(1.5));
    CHECK(d.weight_sensitivity == std::vector<double>{1, 2, 4});
}

TEST_CASE("zero map and identity Jacobian") {
    TaylorMapWeights zero(2, 2);
    CHECK(tmpnn::apply(zero, std::vector<double>{1.7, -0.2}) == std::vector<double>{0, 0});
    const auto d = apply_with_grads(identity_weights(2, 2), std::vector<double>{0.3, 4.0});
    CHECK(d.d_out_d_z == Matrix::identity(2));
}

TEST_CASE("affine maps satisfy superposition") {
    std::mt19937_64 rng(5);
    const auto w = random_weights(rng, 3, 1, 0.5);
    const std::vector<double> a{0.2, -1.0, 3.0}, b{1.5, 0.5, -2.0};
    const double s = 0.3;
    std::vector<double> mix(3);
    for (int j = 0; j < 3; ++j) mix[j] = s * a[j] + (1 - s) * b[j];
    const auto fa = tmpnn::apply(w, a), fb = tmpnn::apply(w, b), fm = tmpnn::apply(w, mix);
    for (int j = 0; j < 3; ++j) CHECK(fm[j] == doctest::Approx(s * fa[j] + (1 - s) * fb[j]).epsilon(1e-12));
}

TEST_CASE("non-finite output raises DivergenceError with the offending input") {
    TaylorMapWeights w(1, 2);
    w.coefficients()(2, 0) = 1.0;
    const std::vector<double> z{1e200};
    try {
        tmpnn::apply(w, z);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.layer_input() == z);
    }
    CHECK_THROWS_AS(tmpnn::apply(w, std::vector<double>{NAN}), NumericDomainError);
    CHECK_THROWS_AS(tmpnn::apply(w, std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST_CASE("map Jacobians match central finite differences") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> dim_pick(1, 4), order_pick(1, 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_z = 0.0, worst_w = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto w = random_weights(rng, dim_pick(rng), order_pick(rng), 0.3);
        const std::size_t d = w.dim();
        std::vector<double> z(d);
        for (double& v : z) v = u(rng);
        const auto grads = apply_with_grads(w, z);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t i = 0; i < d; ++i) {
                auto f = [&](const std::vector<double>& x) { return tmpnn::apply(w, x)[j]; };
                worst_z = std::max(worst_z, test::rel_error(grads.d_out_d_z(j, i), test::central_difference(f, z, i), 1e-3));
            }
        // Output j depends on column j of W through the monomial values.
        for (std::size_t r = 0; r < w.coefficients().rows(); ++r) {
            auto f = [&](const std::vector<double>& c) {
                auto w2 = w;
                w2.coefficients()(r, 0) = c[0];
                return tmpnn::apply(w2, z)[0];
            };
            const double fd = test::central_difference(f, {w.coefficients()(r, 0)}, 0);
            worst_w = std::max(worst_w, test::rel_error(grads.weight_sensitivity[r], fd, 1e-3));
        }
    }
    CHECK(worst_z < 1e-5);
    CHECK(worst_w < 1e-5);
}

TEST_CASE("block passes agree with the per-sample path") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto w = random_weights(rng, 3, 3, 0.2);
    const std::size_t count = 13;
    Matrix z(3, count), phi(w.basis().size(), count), out(3, count);
    for (double& v : z.values()) v = u(rng);
    eval_monomials_block(w.basis(), z, phi);
    apply_block(w, phi, out);

    Matrix g_out(3, count);
    for (double& v : g_out.values()) v = u(rng);
    Matrix g_z(3, count), grad_w(w.basis().size(), 3), g_phi(w.basis().size(), count);
    backprop_block(w, z, phi, g_out, g_z, grad_w, g_phi);

    Matrix grad_ref(w.basis().size(), 3);
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<double> zs{z(0, s), z(1, s), z(2, s)};
        const auto d = apply_with_grads(w, zs);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(out(j, s) == doctest::Approx(d.output[j]).epsilon(1e-13));
            double gz = 0.0;
            for (std::size_t i = 0; i < 3; ++i) gz += g_out(i, s) * d.d_out_d_z(i, j);
            CHECK(g_z(j, s) == doctest::Approx(gz).epsilon(1e-12));
        }
        for (std::size_t r = 0; r < w.basis().size(); ++r)
            for (std::size_t j = 0; j < 3; ++j) grad_ref(r, j) += d.weight_sensitivity[r] * g_out(j, s);
    }
    for (std::size_t r = 0; r < grad_ref.rows(); ++r)
        for (std::size_t j = 0; j < 3; ++j) CHECK(grad_w(r, j) == doctest::Approx(grad_ref(r, j)).epsilon(1e-12));
}
