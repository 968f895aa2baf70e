#pragma once

#include <string>
#include <vector>

#include "lsabr/lmvf.hpp"

namespace lsabr {

enum class Method { Git, AnalyticConstSigma, Fd1d, Fd2d, ThetaRepresentation };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct PriceResult {
    double price = 0.0;
    int modes_used = 0;
    int iterations = 0;
    double solver_residual = 0.0;
    double elapsed = 0.0;  ///< seconds
    Method method = Method::Git;
    int regularized_modes = 0;
    double condition_estimate = 0.0;
    std::vector<std::string> warnings;
};

/// One JSON object with every field of the result.
std::string to_json(const PriceResult& r);

/// Settings for the transform pricer on top of the collocation numerics.
struct GitNumerics {
    LmvfNumerics lmvf;
    bool epsilon_auto = true;  ///< pick epsilon from the tuned strike/beta table
    Summation summation = Summation::Plain;
};

/// Tuned Gaussian shape by nearest beta row and nearest moneyness K/F column; 0.02 at the money.
double epsilon_table(double beta, double strike, double forward);

/// Closed-form series for constant sigma, constant barrier and constant rate.
PriceResult price_analytic_const_sigma(const MarketState& market, const BarrierContract& contract, double rate,
                                       double beta, int n_terms);

/// Same price written as a payoff integral against the Bessel Theta kernel (quadrature in xi).
PriceResult price_theta_representation(const MarketState& market, const BarrierContract& contract,
                                       double rate, double beta, int n_terms);

/// Full transform pricer: collocation solve of the image equation, inverse series at the spot.
PriceResult price_git(const ModelCoefficients& coeffs, const MarketState& market,
                      const BarrierContract& contract, const GitNumerics& numerics);

/// u e^{-int_0^T r}.
double price_to_contract_units(double u_value, double rate_integral);

}  // namespace lsabr
