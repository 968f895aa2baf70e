#include "lsabr/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lsabr/errors.hpp"

namespace lsabr {

namespace {

constexpr double kDegenerateRate = 1e-12;

void check_beta(double beta) {
    if (!(beta > -1.0 && beta < 0.0)) {
        std::ostringstream os;
        os << "beta must lie in (-1, 0), got " << beta;
        throw UnsupportedError(os.str());
    }
}

// int_a^b c e^{-d k} dk, with the d -> 0 limit handled separately.
double exp_integral(double c, double d, double a, double b) {
    if (std::abs(d) < kDegenerateRate) return c * (b - a);
    // e^{-d a} - e^{-d b} = e^{-d b} (e^{d (b - a)} - 1)
    return c / d * std::exp(-d * b) * std::expm1(d * (b - a));
}

}  // namespace

ModelCoefficients ModelCoefficients::exponential(double beta, double gamma1, double gamma2,
                                                 double kappa1, double kappa2, double r0,
                                                 double rho) {
    check_beta(beta);
    if (!(gamma1 >= 0.0) || !(kappa1 >= 0.0) || !std::isfinite(gamma2) || !std::isfinite(kappa2) ||
        !std::isfinite(r0))
        throw ConfigError("exponential coefficients require gamma1 >= 0, kappa1 >= 0 and finite rates");
    if (!(std::abs(rho) <= 1.0)) throw ConfigError("|rho| must not exceed 1");
    ModelCoefficients c;
    c.beta_ = beta;
    c.repr_ = CoeffRepresentation::ParametricExponential;
    c.g1_ = gamma1;
    c.g2_ = gamma2;
    c.k1_ = kappa1;
    c.k2_ = kappa2;
    c.r0_ = r0;
    c.rho0_ = rho;
    return c;
}

ModelCoefficients ModelCoefficients::piecewise(double beta, std::vector<double> starts,
                                               std::vector<double> gamma, std::vector<double> kappa,
                                               std::vector<double> rate, std::vector<double> rho) {
    check_beta(beta);
    const std::size_t n = starts.size();
    if (n == 0) throw ConfigError("piecewise coefficients need at least one piece");
    if (gamma.size() != n || kappa.size() != n || rate.size() != n || (!rho.empty() && rho.size() != n))
        throw ConfigError("piecewise coefficient arrays must have equal length");
    if (starts.front() != 0.0) throw ConfigError("first piecewise start time must be 0");
    for (std::size_t i = 1; i < n; ++i)
        if (!(starts[i] > starts[i - 1])) throw ConfigError("piecewise start times must increase strictly");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(gamma[i] >= 0.0) || !(kappa[i] >= 0.0) || !std::isfinite(rate[i]))
            throw ConfigError("piecewise coefficients require gamma >= 0, kappa >= 0, finite rate");
        if (!rho.empty() && !(std::abs(rho[i]) <= 1.0)) throw ConfigError("|rho| must not exceed 1");
    }
    if (rho.empty()) rho.assign(n, 0.0);
    ModelCoefficients c;
    c.beta_ = beta;
    c.repr_ = CoeffRepresentation::PiecewiseConstant;
    c.starts_ = std::move(starts);
    c.gam_ = std::move(gamma);
    c.kap_ = std::move(kappa);
    c.rat_ = std::move(rate);
    c.rho_ = std::move(rho);
    return c;
}

std::size_t ModelCoefficients::piece(double t) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
    if (it == starts_.begin()) return 0;
    return static_cast<std::size_t>(it - starts_.begin()) - 1;
}

double ModelCoefficients::gamma(double t) const {
    if (repr_ == CoeffRepresentation::ParametricExponential) return g1_ * std::exp(-g2_ * t);
    return gam_[piece(t)];
}

double ModelCoefficients::kappa(double t) const {
    if (repr_ == CoeffRepresentation::ParametricExponential) return k1_ * std::exp(-k2_ * t);
    return kap_[piece(t)];
}

double ModelCoefficients::rho(double t) const {
    if (repr_ == CoeffRepresentation::ParametricExponential) return rho0_;
    return rho_[piece(t)];
}

double ModelCoefficients::rate(double t) const {
    if (repr_ == CoeffRepresentation::ParametricExponential) return r0_;
    return rat_[piece(t)];
}

double ModelCoefficients::piecewise_integral(const std::vector<double>& v, double a, double b,
                                             bool squared) const {
    if (a == b) return 0.0;
    if (a > b) return -piecewise_integral(v, b, a, squared);
    double sum = 0.0;
    const std::size_t n = starts_.size();
    for (std::size_t i = piece(a); i < n; ++i) {
        const double lo = (i == 0) ? a : std::max(a, starts_[i]);
        const double hi = (i + 1 < n) ? std::min(b, starts_[i + 1]) : b;
        if (hi > lo) sum += (squared ? v[i] * v[i] : v[i]) * (hi - lo);
        if (i + 1 < n && starts_[i + 1] >= b) break;
    }
    return sum;
}

double ModelCoefficients::half_gamma_sq_integral(double a, double b) const {
    if (repr_ == CoeffRepresentation::ParametricExponential)
        return 0.5 * exp_integral(g1_ * g1_, 2.0 * g2_, a, b);
    return 0.5 * piecewise_integral(gam_, a, b, true);
}

double ModelCoefficients::kappa_integral(double a, double b) const {
    if (repr_ == CoeffRepresentation::ParametricExponential) return exp_integral(k1_, k2_, a, b);
    return piecewise_integral(kap_, a, b, false);
}

double ModelCoefficients::rate_integral(double a, double b) const {
    if (repr_ == CoeffRepresentation::ParametricExponential) return r0_ * (b - a);
    return piecewise_integral(rat_, a, b, false);
}

bool ModelCoefficients::zero_correlation() const noexcept {
    if (repr_ == CoeffRepresentation::ParametricExponential) return rho0_ == 0.0;
    return std::all_of(rho_.begin(), rho_.end(), [](double r) { return r == 0.0; });
}

bool ModelCoefficients::frozen_volatility() const noexcept {
    if (repr_ == CoeffRepresentation::ParametricExponential) return g1_ == 0.0 && k1_ == 0.0;
    return std::all_of(gam_.begin(), gam_.end(), [](double g) { return g == 0.0; }) &&
           std::all_of(kap_.begin(), kap_.end(), [](double k) { return k == 0.0; });
}

bool ModelCoefficients::positive_gamma() const noexcept {
    if (repr_ == CoeffRepresentation::ParametricExponential) return g1_ > 0.0;
    return std::all_of(gam_.begin(), gam_.end(), [](double g) { return g > 0.0; });
}

namespace {

void check_time(double t, double T) {
    if (!(T >= 0.0) || !(t >= 0.0) || !(t <= T)) {
        std::ostringstream os;
        os << "time " << t << " outside [0, " << T << "]";
        throw DomainError(os.str());
    }
}

}  // namespace

double tau_of_t_extended(const ModelCoefficients& c, double t, double T) {
    if (c.representation() == CoeffRepresentation::ParametricExponential) {
        const double g1 = c.gamma1(), g2 = c.gamma2();
        if (std::abs(g2) < kDegenerateRate) return 0.5 * g1 * g1 * (T - t);
        // g1^2/(4 g2) (e^{-2 g2 t} - e^{-2 g2 T})
        return g1 * g1 / (4.0 * g2) * std::exp(-2.0 * g2 * T) * std::expm1(2.0 * g2 * (T - t));
    }
    return c.half_gamma_sq_integral(t, T);
}

double g_of_t_extended(const ModelCoefficients& c, double t, double T) {
    double kint;
    if (c.representation() == CoeffRepresentation::ParametricExponential) {
        const double k1 = c.kappa1(), k2 = c.kappa2();
        if (std::abs(k2) < kDegenerateRate)
            kint = -k1 * (T - t);
        else  // (k1/k2)(e^{-k2 T} - e^{-k2 t})
            kint = -k1 / k2 * std::exp(-k2 * T) * std::expm1(k2 * (T - t));
    } else {
        kint = -c.kappa_integral(t, T);
    }
    return kint - tau_of_t_extended(c, t, T);
}

double t_of_tau_extended(const ModelCoefficients& c, double tau, double T) {
    if (tau == 0.0) return T;
    if (c.representation() == CoeffRepresentation::ParametricExponential) {
        const double g1 = c.gamma1(), g2 = c.gamma2();
        if (!(g1 > 0.0)) throw DomainError("t_of_tau needs gamma > 0");
        if (std::abs(g2) < kDegenerateRate) return T - 2.0 * tau / (g1 * g1);
        const double arg = 4.0 * g2 * tau * std::exp(2.0 * g2 * T) / (g1 * g1);
        if (!(arg > -1.0)) throw DomainError("tau beyond the range of the exponential family");
        return T - std::log1p(arg) / (2.0 * g2);
    }
    // Piecewise: tau(t) is linear on each piece, but we keep a bracketed bisection
    // because it is representation agnostic and runs rarely.
    const double tau0 = tau_of_t_extended(c, 0.0, T);
    if (tau > tau0) {
        const double g = c.gamma(-1.0);
        if (!(g > 0.0)) throw DomainError("t_of_tau needs gamma > 0");
        return -2.0 * (tau - tau0) / (g * g);
    }
    double lo = 0.0, hi = T;  // tau(lo) >= tau >= tau(hi)
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, T); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (tau_of_t_extended(c, mid, T) > tau)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double tau_of_t(const ModelCoefficients& c, double t, double T) {
    check_time(t, T);
    return tau_of_t_extended(c, t, T);
}

double g_of_t(const ModelCoefficients& c, double t, double T) {
    check_time(t, T);
    return g_of_t_extended(c, t, T);
}

double t_of_tau(const ModelCoefficients& c, double tau, double T) {
    if (!(T >= 0.0)) throw DomainError("maturity must be non-negative");
    const double tau0 = tau_of_t_extended(c, 0.0, T);
    if (!(tau >= 0.0) || tau > tau0 * (1.0 + 1e-14)) {
        std::ostringstream os;
        os << "tau " << tau << " outside [0, " << tau0 << "]";
        throw DomainError(os.str());
    }
    return std::clamp(t_of_tau_extended(c, std::min(tau, tau0), T), 0.0, T);
}

double eta(const ModelCoefficients& c, double t, double p, double T) {
    const double g = c.gamma(t);
    if (!(g > 0.0)) throw DomainError("eta needs gamma(t) > 0");
    if (p == 0.0) return 0.0;
    return -p * p * std::exp(-2.0 * g_of_t(c, t, T)) / (g * g);
}

}  // namespace lsabr
