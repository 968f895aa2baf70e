#include "lsabr/simd.hpp"

#include "kernels_internal.hpp"

namespace lsabr::simd {

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{Isa::Scalar, detail::exp_scalar, detail::axpy_scalar,
                                   detail::dot_scalar, detail::tridiag_scalar};
    return table;
}

const KernelTable* avx2_kernels() noexcept {
#if defined(LSABR_HAVE_AVX2)
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    static const KernelTable table{Isa::Avx2, detail::exp_avx2, detail::axpy_avx2, detail::dot_avx2,
                                   detail::tridiag_avx2};
    return supported ? &table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept {
    static const KernelTable& table = [&]() -> const KernelTable& {
        if (const KernelTable* t = avx2_kernels()) return *t;
        return scalar_kernels();
    }();
    return table;
}

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace lsabr::simd
