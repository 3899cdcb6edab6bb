#pragma once

// Elementwise and reduction kernels used by the batched Taylor-map passes.
//
// Every kernel has a portable scalar reference and vectorized variants
// (AVX2+FMA on x86-64, NEON on AArch64).  The variant is chosen once at
// runtime from the CPU features, and can be overridden for testing.
//
// All variants produce bit-identical results: elementwise kernels use fused
// multiply-add in every backend, and `dot` accumulates into four interleaved
// partial sums combined as (s0 + s1) + (s2 + s3) regardless of vector width.

#include <cstddef>
#include <span>
#include <string_view>

namespace tmpnn::simd {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
    // out[i] = a[i] * b[i]
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // y[i] = fma(a[i], b[i], y[i])
    void (*fma_acc)(const double* a, const double* b, double* y, std::size_t n);
    // y[i] = fma(alpha, x[i], y[i])
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    bool (*all_finite)(const double* a, std::size_t n);
};

bool backend_available(Backend backend) noexcept;
std::string_view backend_name(Backend backend) noexcept;

/// Kernels of a specific backend. Throws InvalidArgument if the backend is
/// not compiled in or not supported by this CPU.
const KernelTable& kernels(Backend backend);

Backend active_backend() noexcept;
/// Overrides runtime selection for the whole process. Not thread-safe with
/// respect to concurrently running kernels.
void set_backend(Backend backend);

// Dispatching front ends over the active backend.

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
void fma_acc(std::span<const double> a, std::span<const double> b, std::span<double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> a);

namespace detail {
const KernelTable& active_table() noexcept;
}

}  // namespace tmpnn::simd
