#include "lsabr/bessel.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "lsabr/errors.hpp"

namespace lsabr {

double bessel_j(double order, double x) {
    if (!(order >= 0.0) || !(x >= 0.0)) {
        std::ostringstream os;
        os << "bessel_j needs order >= 0 and x >= 0, got order=" << order << " x=" << x;
        throw DomainError(os.str());
    }
    if (x == 0.0) return order == 0.0 ? 1.0 : 0.0;
    return boost::math::cyl_bessel_j(order, x);
}

double bessel_j_any_order(double order, double x) {
    if (!(x > 0.0)) throw DomainError("bessel_j_any_order needs x > 0");
    return boost::math::cyl_bessel_j(order, x);
}

double mcmahon_zero(double order, int n) {
    const double pi = std::numbers::pi;
    const double b = n + 0.5 * (order - 0.5);
    return pi * b - (4.0 * order * order - 1.0) / (8.0 * pi * b);
}

namespace {

// Refines a sign-changing bracket until its width reaches a few ulps.
double bisect(double order, double lo, double hi, double flo) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= 1e-14 * std::max(1.0, mid) || mid <= lo || mid >= hi) break;
        const double fm = bessel_j(order, mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    const double flo2 = bessel_j(order, lo), fhi2 = bessel_j(order, hi);
    return std::abs(flo2) <= std::abs(fhi2) ? lo : hi;
}

}  // namespace

BesselBasis bessel_zeros(double order, int count) {
    if (count < 1) throw DomainError("bessel_zeros needs count >= 1");
    if (!(order >= 0.0)) throw DomainError("bessel_zeros needs order >= 0");
    BesselBasis basis;
    basis.order = order;
    basis.zeros.reserve(count);
    // Consecutive zeros of J_order (order >= 0) are more than 2.4 apart and the first
    // exceeds max(order, 2.4), so a unit step from just past the previous zero can not
    // skip one. The McMahon guess gives a one-shot bracket once it is reliable.
    double prev = 0.0;
    for (int n = 1; n <= count; ++n) {
        double lo = 0.0, hi = 0.0, flo = 0.0;
        bool found = false;
        const double guess = mcmahon_zero(order, n);
        if (n > 1) {
            const double a = std::max(guess - 0.5, prev + 1.0), b = guess + 0.5;
            if (b > a) {
                const double fa = bessel_j(order, a), fb = bessel_j(order, b);
                if ((fa < 0.0) != (fb < 0.0) && b < prev + 4.0) {
                    lo = a;
                    hi = b;
                    flo = fa;
                    found = true;
                }
            }
        }
        if (!found) {
            double a = (n == 1) ? std::max(order, 1e-3) : prev + 0.5;
            double fa = bessel_j(order, a);
            for (int step = 0; step < 100000; ++step) {
                const double b = a + 1.0;
                const double fb = bessel_j(order, b);
                if ((fa < 0.0) != (fb < 0.0) || fb == 0.0) {
                    lo = a;
                    hi = b;
                    flo = fa;
                    found = true;
                    break;
                }
                a = b;
                fa = fb;
            }
        }
        if (!found) {
            std::ostringstream os;
            os << "could not bracket zero " << n << " of J_" << order;
            throw InternalError(os.str());
        }
        const double mu = bisect(order, lo, hi, flo);
        if (!(std::abs(bessel_j(order, mu)) < 1e-12) || !(mu > prev)) {
            std::ostringstream os;
            os << "zero " << n << " of J_" << order << " failed refinement at " << mu;
            throw InternalError(os.str());
        }
        basis.zeros.push_back(mu);
        prev = mu;
    }
    basis.j_plus_one.resize(count);
    basis.ratios.resize(count);
    for (int n = 0; n < count; ++n) {
        basis.j_plus_one[n] = bessel_j(order + 1.0, basis.zeros[n]);
        basis.ratios[n] = basis.j_plus_one[n] / basis.zeros[n];
    }
    return basis;
}

BasisPtr cached_basis(double order, int count) {
    static std::mutex mu;
    static std::map<double, BasisPtr> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end() && static_cast<int>(it->second->count()) >= count) {
        if (static_cast<int>(it->second->count()) == count) return it->second;
        auto prefix = std::make_shared<BesselBasis>(*it->second);
        prefix->zeros.resize(count);
        prefix->j_plus_one.resize(count);
        prefix->ratios.resize(count);
        return prefix;
    }
    auto basis = std::make_shared<const BesselBasis>(bessel_zeros(order, count));
    cache[order] = basis;
    return basis;
}

namespace {

// x^{-order} J_order(mu x), continuous at x = 0.
double scaled_j(double order, double mu, double x) {
    if (x == 0.0) return std::pow(0.5 * mu, order) / std::tgamma(order + 1.0);
    return std::pow(x, -order) * bessel_j(order, mu * x);
}

}  // namespace

double bessel_theta(const BesselBasis& basis, double varsigma, double x1, double x2, int n_terms) {
    if (!(varsigma > 0.0)) throw DomainError("bessel_theta needs varsigma > 0");
    if (!(x1 >= 0.0 && x1 <= 1.0 && x2 >= 0.0 && x2 <= 1.0))
        throw DomainError("bessel_theta arguments must lie in [0, 1]");
    if (n_terms < 1 || n_terms > static_cast<int>(basis.count()))
        throw DomainError("bessel_theta term count exceeds the basis");
    const double order = basis.order;
    double sum = 0.0;
    for (int n = 0; n < n_terms; ++n) {
        const double mu = basis.zeros[n];
        const double decay = std::exp(-0.5 * mu * mu * varsigma);
        if (decay == 0.0) break;
        const double jp = basis.j_plus_one[n];
        sum += decay * scaled_j(order, mu, x1) * scaled_j(order, mu, x2) / (jp * jp);
    }
    return sum;
}

double bessel_theta(double order, double varsigma, double x1, double x2, int n_terms) {
    if (!(order >= 0.0)) throw DomainError("bessel_theta needs order >= 0");
    return bessel_theta(*cached_basis(order, n_terms), varsigma, x1, x2, n_terms);
}

}  // namespace lsabr
