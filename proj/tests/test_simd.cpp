#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "tmpnn/error.hpp"
#include "tmpnn/simd.hpp"

using namespace tmpnn;
using simd::Backend;

namespace {

std::vector<Backend> vector_backends() {
    std::vector<Backend> out;
    for (Backend b : {Backend::avx2, Backend::neon})
        if (simd::backend_available(b)) out.push_back(b);
    return out;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> dist(0.0, 3.0);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("scalar backend is always available") {
    CHECK(simd::backend_available(Backend::scalar));
    CHECK(simd::backend_name(Backend::scalar) == "scalar");
    CHECK(simd::backend_available(simd::active_backend()));
}

TEST_CASE("scalar kernels match hand values") {
    const auto& k = simd::kernels(Backend::scalar);
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{2, 0.5, -1, 3, 0};
    std::vector<double> out(5);
    k.mul(a.data(), b.data(), out.data(), 5);
    CHECK(out == std::vector<double>{2, 1, -3, 12, 0});
    std::vector<double> y{1, 1, 1, 1, 1};
    k.fma_acc(a.data(), b.data(), y.data(), 5);
    CHECK(y == std::vector<double>{3, 2, -2, 13, 1});
    std::vector<double> z{0, 0, 0, 0, 0};
    k.axpy(2.0, a.data(), z.data(), 5);
    CHECK(z == std::vector<double>{2, 4, 6, 8, 10});
    CHECK(k.dot(a.data(), b.data(), 5) == doctest::Approx(12.0));
    CHECK(k.dot(a.data(), b.data(), 0) == 0.0);
    CHECK(k.all_finite(a.data(), 5));
    a[3] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(k.all_finite(a.data(), 5));
}

TEST_CASE("vector backends are bit-identical to the scalar reference") {
    const auto& ref = simd::kernels(Backend::scalar);
    std::mt19937_64 rng(7);
    for (Backend backend : vector_backends()) {
        CAPTURE(simd::backend_name(backend));
        const auto& k = simd::kernels(backend);
        for (std::size_t n = 0; n <= 41; ++n) {
            CAPTURE(n);
            const auto a = random_vector(rng, n);
            const auto b = random_vector(rng, n);
            const auto y0 = random_vector(rng, n);
            const double alpha = std::normal_distribution<double>(0.0, 2.0)(rng);

            std::vector<double> o1(n), o2(n);
            ref.mul(a.data(), b.data(), o1.data(), n);
            k.mul(a.data(), b.data(), o2.data(), n);
            CHECK(o1 == o2);

            auto y1 = y0, y2 = y0;
            ref.fma_acc(a.data(), b.data(), y1.data(), n);
            k.fma_acc(a.data(), b.data(), y2.data(), n);
            CHECK(y1 == y2);

            y1 = y0;
            y2 = y0;
            ref.axpy(alpha, a.data(), y1.data(), n);
            k.axpy(alpha, a.data(), y2.data(), n);
            CHECK(y1 == y2);

            CHECK(ref.dot(a.data(), b.data(), n) == k.dot(a.data(), b.data(), n));
            CHECK(k.all_finite(a.data(), n));
            if (n > 0) {
                auto bad = a;
                bad[n / 2] = std::nan("");
                CHECK_FALSE(k.all_finite(bad.data(), n));
                bad[n / 2] = -std::numeric_limits<double>::infinity();
                CHECK_FALSE(k.all_finite(bad.data(), n));
            }
        }
    }
}

TEST_CASE("backend override switches the dispatch target") {
    const Backend original = simd::active_backend();
    simd::set_backend(Backend::scalar);
    CHECK(simd::active_backend() == Backend::scalar);
    std::vector<double> a{1, 2}, b{3, 4};
    CHECK(simd::dot(a, b) == 11.0);
    simd::set_backend(original);
    CHECK(simd::active_backend() == original);
#if !defined(__aarch64__)
    CHECK_THROWS_AS(simd::set_backend(Backend::neon), InvalidArgument);
#endif
}
