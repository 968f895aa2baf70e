// Compiled with -mavx2 -mfma -ffp-contract=off. axpy and tridiag use the same operation
// sequence as the scalar reference and are bit-identical to it; exp differs by a few ulps.

#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace lsabr::simd::detail {

namespace {

inline __m256d exp4(__m256d x) {
    const __m256d hi = _mm256_set1_pd(709.782712893384);
    const __m256d lo = _mm256_set1_pd(kExpUnderflow);
    const __m256d over = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
    const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(1.26177193074810590878e-4), rr,
                                _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042e-6), rr,
                                _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.0));
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

    // 2^n as 2^{n1} 2^{n2}, n1 = floor(n/2), so both halves stay normal for n in [-1022, 1024].
    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m128i n1 = _mm_srai_epi32(ni, 1);
    const __m128i n2 = _mm_sub_epi32(ni, n1);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256d s1 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n1), bias), 52));
    const __m256d s2 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n2), bias), 52));
    e = _mm256_mul_pd(_mm256_mul_pd(e, s1), s2);

    e = _mm256_blendv_pd(e, _mm256_set1_pd(HUGE_VAL), over);
    e = _mm256_blendv_pd(e, _mm256_setzero_pd(), under);
    return e;
}

}  // namespace

void exp_avx2(const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t k = i; k < n; ++k) buf[k - i] = x[k];
        _mm256_store_pd(buf, exp4(_mm256_load_pd(buf)));
        for (std::size_t k = i; k < n; ++k) out[k] = buf[k - i];
    }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void tridiag_avx2(const double* lower, const double* diag, const double* upper, double* rhs,
                  double* work, std::size_t n, std::size_t m) {
    std::size_t s = 0;
    for (; s + 4 <= m; s += 4) {
        __m256d denom = _mm256_loadu_pd(diag + s);
        __m256d w = _mm256_div_pd(_mm256_loadu_pd(upper + s), denom);
        __m256d r = _mm256_div_pd(_mm256_loadu_pd(rhs + s), denom);
        _mm256_storeu_pd(work + s, w);
        _mm256_storeu_pd(rhs + s, r);
        for (std::size_t i = 1; i < n; ++i) {
            const std::size_t k = i * m + s;
            const __m256d l = _mm256_loadu_pd(lower + k);
            denom = _mm256_sub_pd(_mm256_loadu_pd(diag + k), _mm256_mul_pd(l, w));
            w = _mm256_div_pd(_mm256_loadu_pd(upper + k), denom);
            r = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(rhs + k), _mm256_mul_pd(l, r)), denom);
            _mm256_storeu_pd(work + k, w);
            _mm256_storeu_pd(rhs + k, r);
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            const std::size_t k = i * m + s;
            r = _mm256_sub_pd(_mm256_loadu_pd(rhs + k), _mm256_mul_pd(_mm256_loadu_pd(work + k), r));
            _mm256_storeu_pd(rhs + k, r);
        }
    }
    if (s < m) {
        // Remaining systems: run the scalar sweep on each leftover column.
        for (; s < m; ++s) {
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
}

}  // namespace lsabr::simd::detail
