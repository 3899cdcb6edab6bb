#include <cmath>

#include "kernels_impl.hpp"

namespace tmpnn::simd::detail {
namespace {

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void fma_acc(const double* a, const double* b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a[i], b[i], y[i]);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

// Four interleaved partial sums; lane i % 4 receives element i.
double dot(const double* a, const double* b, std::size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) s[i % 4] = std::fma(a[i], b[i], s[i % 4]);
    return (s[0] + s[1]) + (s[2] + s[3]);
}

bool all_finite(const double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

}  // namespace

const KernelTable scalar_table{&mul, &fma_acc, &axpy, &dot, &all_finite};

}  // namespace tmpnn::simd::detail
