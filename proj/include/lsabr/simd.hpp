#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference implementation and an
// AVX2 variant; the active table is chosen once at runtime from CPUID.

namespace lsabr::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    /// out[i] = exp(x[i]). Underflow flushes to 0; arguments above ~709.78 give +inf.
    void (*exp)(const double* x, double* out, std::size_t n);
    /// y[i] += a * x[i].
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    /// sum x[i] y[i]. Reduction order is fixed per ISA.
    double (*dot)(const double* x, const double* y, std::size_t n);
    /// Solves m independent tridiagonal systems of size n, stored interleaved: entry i of
    /// system s lives at [i*m + s]. lower[0..m) and upper[(n-1)m..nm) are ignored.
    /// rhs is overwritten with the solution; work needs n*m doubles.
    void (*tridiag)(const double* lower, const double* diag, const double* upper, double* rhs,
                    double* work, std::size_t n, std::size_t m);
};

const KernelTable& scalar_kernels() noexcept;
/// nullptr when the binary or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;
/// Table selected at first use: AVX2 if available, else scalar.
const KernelTable& active() noexcept;
std::string_view isa_name(Isa isa) noexcept;

inline void exp(std::span<const double> x, std::span<double> out) {
    active().exp(x.data(), out.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}
inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}

}  // namespace lsabr::simd
