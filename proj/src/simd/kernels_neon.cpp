#include <arm_neon.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace tmpnn::simd::detail {
namespace {

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void fma_acc(const double* a, const double* b, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) y[i] = std::fma(a[i], b[i], y[i]);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

// Two q-registers hold lanes {0,1} and {2,3} of the four-lane reference.
double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        lo = vfmaq_f64(lo, vld1q_f64(a + i), vld1q_f64(b + i));
        hi = vfmaq_f64(hi, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s[4];
    vst1q_f64(s, lo);
    vst1q_f64(s + 2, hi);
    for (std::size_t lane = 0; i < n; ++i, ++lane) s[lane] = std::fma(a[i], b[i], s[lane]);
    return (s[0] + s[1]) + (s[2] + s[3]);
}

bool all_finite(const double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

}  // namespace

const KernelTable neon_table{&mul, &fma_acc, &axpy, &dot, &all_finite};

}  // namespace tmpnn::simd::detail
