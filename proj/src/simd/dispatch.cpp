#include <atomic>
#include <cassert>

#include "kernels_impl.hpp"
#include "tmpnn/error.hpp"

namespace tmpnn::simd {
namespace {

bool cpu_supports(Backend backend) noexcept {
    switch (backend) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(TMPNN_HAVE_AVX2)
            __builtin_cpu_init();
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::neon:
#if defined(TMPNN_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend detect() noexcept {
    if (cpu_supports(Backend::avx2)) return Backend::avx2;
    if (cpu_supports(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

const KernelTable* table_for(Backend backend) noexcept {
    switch (backend) {
        case Backend::scalar:
            return &detail::scalar_table;
        case Backend::avx2:
#if defined(TMPNN_HAVE_AVX2)
            return &detail::avx2_table;
#else
            return nullptr;
#endif
        case Backend::neon:
#if defined(TMPNN_HAVE_NEON)
            return &detail::neon_table;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

struct Selection {
    std::atomic<Backend> backend{detect()};
    std::atomic<const KernelTable*> table{table_for(backend.load())};
};

Selection& selection() noexcept {
    static Selection s;
    return s;
}

}  // namespace

bool backend_available(Backend backend) noexcept {
    return table_for(backend) != nullptr && cpu_supports(backend);
}

std::string_view backend_name(Backend backend) noexcept {
    switch (backend) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
        case Backend::neon:
            return "neon";
    }
    return "unknown";
}

const KernelTable& kernels(Backend backend) {
    if (!backend_available(backend))
        throw InvalidArgument("SIMD backend '" + std::string(backend_name(backend)) +
                              "' is not available on this machine");
    return *table_for(backend);
}

Backend active_backend() noexcept { return selection().backend.load(); }

void set_backend(Backend backend) {
    const KernelTable& t = kernels(backend);
    selection().backend.store(backend);
    selection().table.store(&t);
}

namespace detail {
const KernelTable& active_table() noexcept { return *selection().table.load(std::memory_order_relaxed); }
}  // namespace detail

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    assert(a.size() == b.size() && out.size() == a.size());
    detail::active_table().mul(a.data(), b.data(), out.data(), a.size());
}

void fma_acc(std::span<const double> a, std::span<const double> b, std::span<double> y) {
    assert(a.size() == b.size() && y.size() == a.size());
    detail::active_table().fma_acc(a.data(), b.data(), y.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    detail::active_table().axpy(alpha, x.data(), y.data(), x.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return detail::active_table().dot(a.data(), b.data(), a.size());
}

bool all_finite(std::span<const double> a) {
    return detail::active_table().all_finite(a.data(), a.size());
}

}  // namespace tmpnn::simd
