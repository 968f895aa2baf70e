#include "lsabr/pricer.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "lsabr/errors.hpp"
#include "result_checks.hpp"

namespace lsabr {

std::string method_name(Method m) {
    switch (m) {
        case Method::Git: return "git";
        case Method::AnalyticConstSigma: return "analytic-const-sigma";
        case Method::Fd1d: return "fd-1d";
        case Method::Fd2d: return "fd-2d";
        case Method::ThetaRepresentation: return "theta-representation";
    }
    return "git";
}

Method parse_method(const std::string& name) {
    if (name == "git") return Method::Git;
    if (name == "analytic" || name == "analytic-const-sigma") return Method::AnalyticConstSigma;
    if (name == "fd-1d") return Method::Fd1d;
    if (name == "fd-2d" || name == "fd") return Method::Fd2d;
    if (name == "theta" || name == "theta-representation") return Method::ThetaRepresentation;
    throw ConfigError("unknown method '" + name + "' (expected git, analytic, theta, fd-1d, fd-2d or fd)");
}

std::string to_json(const PriceResult& r) {
    nlohmann::json j;
    j["method"] = method_name(r.method);
    j["price"] = r.price;
    j["modes_used"] = r.modes_used;
    j["iterations"] = r.iterations;
    j["solver_residual"] = r.solver_residual;
    j["elapsed_s"] = r.elapsed;
    j["regularized_modes"] = r.regularized_modes;
    j["condition_estimate"] = r.condition_estimate;
    j["warnings"] = r.warnings;
    return j.dump();
}

double epsilon_table(double beta, double strike, double forward) {
    static constexpr double kBeta[2] = {-0.1, -0.7};
    static constexpr double kMoneyness[6] = {45.0 / 60, 50.0 / 60, 55.0 / 60, 1.0, 65.0 / 60, 70.0 / 60};
    static constexpr double kEps[2][6] = {{0.10, 0.10, 0.10, 0.02, 0.15, 0.15},
                                          {0.15, 0.15, 0.15, 0.02, 0.15, 0.10}};
    const int row = std::abs(beta - kBeta[0]) <= std::abs(beta - kBeta[1]) ? 0 : 1;
    const double m = strike / forward;
    int col = 0;
    for (int c = 1; c < 6; ++c)
        if (std::abs(m - kMoneyness[c]) < std::abs(m - kMoneyness[col])) col = c;
    return kEps[row][col];
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_const_inputs(const MarketState& market, const BarrierContract& contract, double beta) {
    if (!contract.barrier.is_constant())
        throw UnsupportedError("the constant-sigma pricers need a constant barrier");
    if (!(beta > -1.0 && beta < 0.0)) throw UnsupportedError("beta must lie in (-1, 0)");
    if (!(market.forward > 0.0) || !(market.sigma > 0.0)) throw DomainError("forward and sigma must be positive");
    if (!(contract.maturity > 0.0)) throw DomainError("maturity must be positive");
    if (contract.barrier.level < contract.strike) throw ContractError("barrier below strike");
}

}  // namespace

double price_to_contract_units(double u_value, double rate_integral) { return u_value * std::exp(-rate_integral); }

PriceResult price_analytic_const_sigma(const MarketState& market, const BarrierContract& contract, double rate,
                                       double beta, int n_terms) {
    const auto t0 = Clock::now();
    check_const_inputs(market, contract, beta);
    if (n_terms < 1) throw ConfigError("analytic term count must be positive");
    PriceResult r;
    r.method = Method::AnalyticConstSigma;
    r.modes_used = n_terms;
    const double H = contract.barrier.level;
    if (market.forward >= H) {
        r.elapsed = seconds_since(t0);
        return r;
    }
    const ModelCoefficients c = ModelCoefficients::exponential(beta, 0.0, 0.0, 0.0, 0.0, rate);
    const TransformContext ctx = make_context(c, contract, n_terms);
    const BesselBasis& basis = ctx.basis();
    const double y = ctx.y_terminal(), x = x_of_forward(beta, market.forward);
    const double s2T = market.sigma * market.sigma * contract.maturity;
    std::vector<double> images(n_terms);
    for (int n = 0; n < n_terms; ++n) {
        const double mu = basis.zeros[n];
        images[n] = terminal_image(ctx, mu / y) * std::exp(-0.5 * mu * mu * s2T / (y * y));
    }
    const double u = inverse_series(ctx, images, x, contract.maturity, Summation::Plain);
    r.price = price_to_contract_units(u, rate * contract.maturity);
    detail::finalize_price(r, market.forward);
    r.elapsed = seconds_since(t0);
    return r;
}

PriceResult price_theta_representation(const MarketState& market, const BarrierContract& contract, double rate,
                                       double beta, int n_terms) {
    const auto t0 = Clock::now();
    check_const_inputs(market, contract, beta);
    if (n_terms < 1) throw ConfigError("theta term count must be positive");
    PriceResult r;
    r.method = Method::ThetaRepresentation;
    r.modes_used = n_terms;
    const double H = contract.barrier.level, K = contract.strike;
    if (market.forward >= H || K >= H) {
        r.elapsed = seconds_since(t0);
        return r;
    }
    const double nu = 1.0 / (2.0 * beta), order = -nu;
    const BasisPtr basis = cached_basis(order, n_terms);
    const double y = x_of_forward(beta, H), x = x_of_forward(beta, market.forward);
    const double A = std::pow(-beta * y, -1.0 / beta);
    const double varsigma = market.sigma * market.sigma * contract.maturity / (y * y);
    const double xr = x / y;

    // The x/y factor of Theta is the same at every quadrature node. Terms whose damping
    // has underflowed below 1e-17 of the first are dropped.
    std::vector<double> fixed;
    for (int n = 0; n < n_terms; ++n) {
        const double damp = 0.5 * (basis->zeros[n] * basis->zeros[n] - basis->zeros[0] * basis->zeros[0]) * varsigma;
        if (damp > 40.0) break;
        fixed.push_back(std::exp(-0.5 * basis->zeros[n] * basis->zeros[n] * varsigma) * std::pow(xr, nu) *
                        bessel_j(order, basis->zeros[n] * xr) / basis->j_plus_one[n]);
    }
    const int active = static_cast<int>(fixed.size());
    auto integrand = [&](double xi) {
        if (xi <= 0.0) return 0.0;
        const double payoff = A * std::pow(xi, -2.0 * nu) - K;
        if (payoff <= 0.0) return 0.0;
        double theta = 0.0;
        const double xin = std::pow(xi, nu);
        for (int n = 0; n < active; ++n)
            theta += fixed[n] * xin * bessel_j(order, basis->zeros[n] * xi) / basis->j_plus_one[n];
        return payoff * xi * theta;
    };
    // Payoff is positive for xi > (K/A)^{1/(-2 nu)} = a/y. Panels span about two periods of
    // the fastest retained mode; one 61-point Kronrod rule per panel is then at round-off.
    const double xi_k = std::pow(K / A, 1.0 / (-2.0 * nu));
    const double mu_top = basis->zeros[std::max(active, 1) - 1];
    const int panels = std::max(1, static_cast<int>(std::ceil(mu_top * (1.0 - xi_k) / (4.0 * std::numbers::pi))));
    double integral = 0.0, err = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = xi_k + (1.0 - xi_k) * p / panels, hi = xi_k + (1.0 - xi_k) * (p + 1) / panels;
        double e = 0.0;
        integral += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 0, 0.0, &e);
        err += e;
    }
    const double pre = 2.0 * std::pow(x, -2.0 * nu) * std::pow(y, 2.0 * nu);
    r.price = price_to_contract_units(pre * integral, rate * contract.maturity);
    r.solver_residual = pre * err;
    detail::finalize_price(r, market.forward);
    r.elapsed = seconds_since(t0);
    return r;
}

PriceResult price_git(const ModelCoefficients& coeffs, const MarketState& market, const BarrierContract& contract,
                      const GitNumerics& numerics) {
    const auto t0 = Clock::now();
    if (!(market.forward > 0.0) || !(market.sigma > 0.0)) throw DomainError("forward and sigma must be positive");
    PriceResult r;
    r.method = Method::Git;
    LmvfNumerics nm = numerics.lmvf;
    if (numerics.epsilon_auto) nm.epsilon = epsilon_table(coeffs.beta(), contract.strike, market.forward);
    const TransformContext ctx = make_context(coeffs, contract, nm.modes);
    const double x0 = x_of_forward(coeffs.beta(), market.forward);
    if (!(x0 < ctx.y(0.0))) throw ContractError("spot forward is not strictly below the barrier");

    const RBFSystem sys = assemble_system(ctx, market.sigma, nm);
    r.warnings = sys.warnings;
    r.condition_estimate = sys.condition_estimate;
    const IterationResult it = iterate(sys, ctx, nm.modes, nm.iteration_tol, nm.max_iterations, nm);

    std::vector<double> images(nm.modes);
    for (int i = 0; i < nm.modes; ++i) {
        const ModeSolution& s = it.modes[i];
        images[i] = s.scale * evaluate_image(s, sys, sys.tau0, sys.z0);
        r.solver_residual = std::max(r.solver_residual, s.residual_norm);
        if (s.regularized) ++r.regularized_modes;
    }
    const double u = inverse_series(ctx, images, x0, 0.0, numerics.summation);
    r.price = price_to_contract_units(u, coeffs.rate_integral(0.0, contract.maturity));
    r.modes_used = nm.modes;
    r.iterations = it.iterations;
    detail::finalize_price(r, market.forward);
    r.elapsed = seconds_since(t0);
    return r;
}

}  // namespace lsabr
