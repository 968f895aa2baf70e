#pragma once

#include <cstddef>

namespace lsabr::simd::detail {

// Below this argument exp() is subnormal; both ISAs flush to zero.
inline constexpr double kExpUnderflow = -708.39641853226408;

void exp_scalar(const double* x, double* out, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
double dot_scalar(const double* x, const double* y, std::size_t n);
void tridiag_scalar(const double* lower, const double* diag, const double* upper, double* rhs,
                    double* work, std::size_t n, std::size_t m);

#if defined(LSABR_HAVE_AVX2)
void exp_avx2(const double* x, double* out, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
double dot_avx2(const double* x, const double* y, std::size_t n);
void tridiag_avx2(const double* lower, const double* diag, const double* upper, double* rhs,
                  double* work, std::size_t n, std::size_t m);
#endif

}  // namespace lsabr::simd::detail
