#pragma once

#include <vector>

namespace lsabr {

enum class CoeffRepresentation { ParametricExponential, PiecewiseConstant };

/// Time-dependent λ-SABR coefficients for the branch -1 < beta < 0.
///
/// Parametric form: gamma(t) = g1 e^{-g2 t}, kappa(t) = k1 e^{-k2 t}, rate = r0, rho constant.
/// Piecewise form: value i holds on [t_i, t_{i+1}); t_0 = 0 and the last value extends
/// to infinity. Both forms extend their first piece to t < 0 for the internal
/// "*_extended" helpers.
class ModelCoefficients {
public:
    static ModelCoefficients exponential(double beta, double gamma1, double gamma2, double kappa1,
                                         double kappa2, double r0, double rho = 0.0);
    static ModelCoefficients piecewise(double beta, std::vector<double> starts,
                                       std::vector<double> gamma, std::vector<double> kappa,
                                       std::vector<double> rate, std::vector<double> rho = {});

    double beta() const noexcept { return beta_; }
    CoeffRepresentation representation() const noexcept { return repr_; }

    double gamma(double t) const;
    double kappa(double t) const;
    double rho(double t) const;
    double rate(double t) const;

    /// (1/2) int_a^b gamma^2 dk.
    double half_gamma_sq_integral(double a, double b) const;
    /// int_a^b kappa dk.
    double kappa_integral(double a, double b) const;
    /// int_a^b r dk.
    double rate_integral(double a, double b) const;

    bool zero_correlation() const noexcept;
    /// gamma == 0 and kappa == 0 everywhere: sigma stays at its initial value.
    bool frozen_volatility() const noexcept;
    /// gamma > 0 everywhere (required by the transform path).
    bool positive_gamma() const noexcept;

    // Parametric fields (valid for ParametricExponential).
    double gamma1() const noexcept { return g1_; }
    double gamma2() const noexcept { return g2_; }
    double kappa1() const noexcept { return k1_; }
    double kappa2() const noexcept { return k2_; }
    double r0() const noexcept { return r0_; }

    // Piecewise fields (valid for PiecewiseConstant).
    const std::vector<double>& starts() const noexcept { return starts_; }
    const std::vector<double>& gamma_values() const noexcept { return gam_; }
    const std::vector<double>& kappa_values() const noexcept { return kap_; }
    const std::vector<double>& rate_values() const noexcept { return rat_; }

private:
    ModelCoefficients() = default;
    std::size_t piece(double t) const;
    double piecewise_integral(const std::vector<double>& v, double a, double b, bool squared) const;

    double beta_ = -0.5;
    CoeffRepresentation repr_ = CoeffRepresentation::ParametricExponential;
    double g1_ = 0, g2_ = 0, k1_ = 0, k2_ = 0, r0_ = 0, rho0_ = 0;
    std::vector<double> starts_, gam_, kap_, rat_, rho_;
};

/// Initial volatility and forward.
struct MarketState {
    double forward;
    double sigma;
};

/// tau(t) = (1/2) int_t^T gamma^2. Requires 0 <= t <= T.
double tau_of_t(const ModelCoefficients& c, double t, double T);
/// g(t) = int_T^t kappa - tau(t). Requires 0 <= t <= T.
double g_of_t(const ModelCoefficients& c, double t, double T);
/// Inverse of tau_of_t. Requires 0 <= tau <= tau_of_t(c, 0, T).
double t_of_tau(const ModelCoefficients& c, double tau, double T);
/// eta(t,p) = -p^2 e^{-2 g(t)} / gamma^2(t).
double eta(const ModelCoefficients& c, double t, double p, double T);

/// Same maps without the [0,T] domain check; t < 0 uses the first piece extended.
double tau_of_t_extended(const ModelCoefficients& c, double t, double T);
double g_of_t_extended(const ModelCoefficients& c, double t, double T);
double t_of_tau_extended(const ModelCoefficients& c, double tau, double T);

}  // namespace lsabr
