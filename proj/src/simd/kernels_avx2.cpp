// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace tmpnn::simd::detail {
namespace {

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, vb));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void fma_acc(const double* a, const double* b, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vb, vy));
    }
    for (; i < n; ++i) y[i] = std::fma(a[i], b[i], y[i]);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy));
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    // Tail keeps the lane assignment of the scalar reference (i % 4).
    for (std::size_t lane = 0; i < n; ++i, ++lane) s[lane] = std::fma(a[i], b[i], s[lane]);
    return (s[0] + s[1]) + (s[2] + s[3]);
}

bool all_finite(const double* a, std::size_t n) {
    // x - x is NaN exactly when x is infinite or NaN.
    __m256d bad = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(a + i);
        bad = _mm256_or_pd(bad, _mm256_cmp_pd(_mm256_sub_pd(v, v), _mm256_setzero_pd(), _CMP_NEQ_UQ));
    }
    if (_mm256_movemask_pd(bad) != 0) return false;
    for (; i < n; ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

}  // namespace

const KernelTable avx2_table{&mul, &fma_acc, &axpy, &dot, &all_finite};

}  // namespace tmpnn::simd::detail
