#include <cmath>

#include "kernels_internal.hpp"

namespace lsabr::simd::detail {

void exp_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] < kExpUnderflow ? 0.0 : std::exp(x[i]);
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void tridiag_scalar(const double* lower, const double* diag, const double* upper, double* rhs,
                    double* work, std::size_t n, std::size_t m) {
    for (std::size_t s = 0; s < m; ++s) {
        double denom = diag[s];
        work[s] = upper[s] / denom;
        rhs[s] = rhs[s] / denom;
        for (std::size_t i = 1; i < n; ++i) {
            const std::size_t k = i * m + s, km = k - m;
            denom = diag[k] - lower[k] * work[km];
            work[k] = upper[k] / denom;
            rhs[k] = (rhs[k] - lower[k] * rhs[km]) / denom;
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            const std::size_t k = i * m + s;
            rhs[k] = rhs[k] - work[k] * rhs[k + m];
        }
    }
}

}  // namespace lsabr::simd::detail
