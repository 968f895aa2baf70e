#include "lsabr/transform.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "lsabr/errors.hpp"

namespace lsabr {

double Barrier::at(double t) const {
    switch (kind) {
        case Kind::Constant: return level;
        case Kind::Exponential: return level * std::exp(growth * t);
        case Kind::Linear: return level * (1.0 + growth * t);
    }
    return level;
}

double x_of_forward(double beta, double forward) {
    if (!(forward >= 0.0)) throw DomainError("forward must be non-negative");
    if (forward == 0.0) return 0.0;
    return -std::pow(forward, -beta) / beta;
}

TransformContext::TransformContext(ModelCoefficients coeffs, BarrierContract contract, BasisPtr basis)
    : coeffs_(std::move(coeffs)), contract_(contract), basis_(std::move(basis)) {
    const double beta = coeffs_.beta();
    nu_ = 1.0 / (2.0 * beta);
    b_ = nu_ + 0.5;
    a_ = x_of_forward(beta, contract_.strike);
    yT_ = y(contract_.maturity);
}

double TransformContext::y(double t) const { return x_of_forward(beta(), contract_.barrier.at(t)); }

TransformContext make_context(const ModelCoefficients& coeffs, const BarrierContract& contract,
                              int basis_size) {
    if (!coeffs.zero_correlation())
        throw UnsupportedError("the transform path requires zero correlation");
    if (!(contract.maturity > 0.0)) throw ContractError("maturity must be positive");
    if (!(contract.strike > 0.0)) throw ContractError("strike must be positive");
    if (!(contract.barrier.level > 0.0)) throw ContractError("barrier must be positive");
    for (double t : {0.0, contract.maturity})
        if (!(contract.barrier.at(t) > 0.0)) throw ContractError("barrier must stay positive");
    if (contract.barrier.at(contract.maturity) < contract.strike) {
        std::ostringstream os;
        os << "barrier H(T)=" << contract.barrier.at(contract.maturity) << " below strike "
           << contract.strike;
        throw ContractError(os.str());
    }
    const double order = -1.0 / (2.0 * coeffs.beta());
    return TransformContext(coeffs, contract, cached_basis(order, basis_size));
}

namespace {

// Power series in p: sum_k (-1)^k (p/2)^{2k+|nu|} / (k! Gamma(k+|nu|+1)) M_k,
// M_k = int_a^y [c x^{-1/beta} - K] x^{2k+1} dx.
double terminal_image_series(const TransformContext& ctx, double p) {
    const double beta = ctx.beta(), order = ctx.order(), K = ctx.contract().strike;
    const double a = ctx.a_strike(), y = ctx.y_terminal();
    const double c = std::pow(-beta, -1.0 / beta);
    double coef = std::pow(0.5 * p, order) / std::tgamma(order + 1.0);
    double sum = 0.0;
    for (int k = 0; k < 60; ++k) {
        const double e = 2.0 * k + 2.0 - 1.0 / beta;
        const double m = 2.0 * k + 2.0;
        const double Mk = c * (std::pow(y, e) - std::pow(a, e)) / e - K * (std::pow(y, m) - std::pow(a, m)) / m;
        const double term = coef * Mk;
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        coef *= -(0.25 * p * p) / ((k + 1.0) * (k + 1.0 + order));
    }
    return sum;
}

}  // namespace

double terminal_image(const TransformContext& ctx, double p) {
    if (!(p > 0.0)) throw DomainError("terminal_image needs p > 0");
    const double beta = ctx.beta(), nu = ctx.nu(), K = ctx.contract().strike;
    const double a = ctx.a_strike(), y = ctx.y_terminal();
    if (a >= y) return 0.0;
    // The closed form loses ~(p y)^{-2} relative digits to cancellation; below p y = 1/2
    // the power series is both cheap and exact to rounding.
    if (p * y < 0.5) return terminal_image_series(ctx, p);
    const double c = std::pow(-beta, -1.0 / beta);
    const double first = std::pow(a, 1.0 - nu) * bessel_j_any_order(1.0 - nu, a * p) -
                         std::pow(y, 1.0 - nu) * bessel_j_any_order(1.0 - nu, y * p);
    const double second = std::pow(y, 1.0 + nu) * bessel_j_any_order(-1.0 - nu, y * p) -
                          std::pow(a, 1.0 + nu) * bessel_j_any_order(-1.0 - nu, a * p);
    return -(c * first - K * second) / p;
}

double forward_git(const TransformContext& ctx, const std::function<double(double)>& u, double t,
                   double p, std::span<const double> breakpoints, double tol) {
    if (!(p > 0.0)) throw DomainError("forward_git needs p > 0");
    const double y = ctx.y(t), nu = ctx.nu(), order = ctx.order();
    auto integrand = [&](double x) {
        if (x <= 0.0) return 0.0;
        return u(x) * std::pow(x, nu + 1.0) * bessel_j(order, x * p);
    };
    std::vector<double> cuts{0.0};
    for (double b : breakpoints)
        if (b > 0.0 && b < y) cuts.push_back(b);
    cuts.push_back(y);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0, err_total = 0.0, l1_total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double err = 0.0, l1 = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            integrand, cuts[i], cuts[i + 1], 20, tol, &err, &l1);
        err_total += err;
        l1_total += l1;
    }
    if (err_total > 100.0 * tol * std::max(l1_total, 1e-300) && err_total > 1e-300) {
        std::ostringstream os;
        os << "forward transform quadrature did not converge, error estimate " << err_total;
        throw AccuracyError(os.str(), err_total);
    }
    return total;
}

double inverse_series(const TransformContext& ctx, std::span<const double> image_values, double x,
                      double t, Summation summation) {
    if (image_values.empty()) throw DomainError("inverse_series needs at least one image value");
    const BesselBasis& basis = ctx.basis();
    if (image_values.size() > basis.count()) throw DomainError("more image values than basis zeros");
    const double y = ctx.y(t);
    if (x == y) return 0.0;
    if (!(x < y)) throw DomainError("inverse_series needs x < y(t)");
    if (!(x > 0.0)) {
        if (x == 0.0) return 0.0;
        throw DomainError("inverse_series needs x > 0");
    }
    const double order = ctx.order(), nu = ctx.nu();
    const double pre = 2.0 * std::pow(x, -nu) / (y * y);
    double partial = 0.0, mean_acc = 0.0;
    const std::size_t N = image_values.size();
    for (std::size_t n = 0; n < N; ++n) {
        const double jp = basis.j_plus_one[n];
        partial += image_values[n] * bessel_j(order, basis.zeros[n] * x / y) / (jp * jp);
        mean_acc += partial;
    }
    const double s = summation == Summation::Plain ? partial : mean_acc / static_cast<double>(N);
    return pre * s;
}

double barrier_gradient(const TransformContext& ctx, std::span<const double> image_values, double t) {
    const BesselBasis& basis = ctx.basis();
    if (image_values.size() > basis.count()) throw DomainError("more image values than basis zeros");
    const double y = ctx.y(t);
    double s = 0.0;
    for (std::size_t n = 0; n < image_values.size(); ++n)
        s += basis.zeros[n] * image_values[n] / basis.j_plus_one[n];
    return -s / std::pow(y, ctx.nu() + 3.0);
}

}  // namespace lsabr
