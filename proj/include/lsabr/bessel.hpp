#pragma once

#include <memory>
#include <vector>

namespace lsabr {

/// First N positive zeros of J_order with the quantities reused by every series.
struct BesselBasis {
    double order = 0.0;
    std::vector<double> zeros;       ///< mu_1 < mu_2 < ... < mu_N
    std::vector<double> j_plus_one;  ///< J_{order+1}(mu_n)
    std::vector<double> ratios;      ///< R_n = J_{order+1}(mu_n) / mu_n
    std::size_t count() const noexcept { return zeros.size(); }
};

using BasisPtr = std::shared_ptr<const BesselBasis>;

/// J_order(x) for order >= 0, x >= 0.
double bessel_j(double order, double x);

/// J_order(x) for any real order (the transform needs J_{|nu|-1} with |nu| < 1).
double bessel_j_any_order(double order, double x);

/// McMahon large-index estimate of the n-th zero of J_order (n >= 1).
double mcmahon_zero(double order, int n);

/// Computes the first `count` zeros. Throws InternalError if a zero cannot be bracketed.
BesselBasis bessel_zeros(double order, int count);

/// Process-wide immutable cache keyed by (order, count). A request for fewer zeros than
/// a cached basis of the same order is served from a prefix copy.
BasisPtr cached_basis(double order, int count);

/// Theta_{order}(s, x1, x2) = sum_n e^{-mu_n^2 s/2} x1^nu J(mu_n x1)/J_{+1}(mu_n) x2^nu J(mu_n x2)/J_{+1}(mu_n),
/// nu = -order. Requires s > 0.
double bessel_theta(double order, double varsigma, double x1, double x2, int n_terms);
double bessel_theta(const BesselBasis& basis, double varsigma, double x1, double x2, int n_terms);

}  // namespace lsabr
