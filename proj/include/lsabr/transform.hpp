#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lsabr/bessel.hpp"
#include "lsabr/coeffs.hpp"

namespace lsabr {

/// Upper barrier H(t): constant, H0 e^{g t}, or H0 (1 + g t).
struct Barrier {
    enum class Kind { Constant, Exponential, Linear };
    Kind kind = Kind::Constant;
    double level = 0.0;
    double growth = 0.0;

    static Barrier constant(double h) { return {Kind::Constant, h, 0.0}; }
    static Barrier exponential(double h0, double g) { return {Kind::Exponential, h0, g}; }
    static Barrier linear(double h0, double g) { return {Kind::Linear, h0, g}; }

    double at(double t) const;
    bool is_constant() const noexcept { return kind == Kind::Constant || growth == 0.0; }
};

/// Up-and-out call with strike K, barrier H(t) and maturity T.
struct BarrierContract {
    double strike;
    Barrier barrier;
    double maturity;
};

enum class Summation { Plain, Cesaro };

/// x = -F^{-beta}/beta.
double x_of_forward(double beta, double forward);

/// Derived quantities of the CEV change of variables for one model/contract pair.
class TransformContext {
public:
    TransformContext(ModelCoefficients coeffs, BarrierContract contract, BasisPtr basis);

    double beta() const noexcept { return coeffs_.beta(); }
    double nu() const noexcept { return nu_; }          ///< 1/(2 beta) < -1/2
    double b_drift() const noexcept { return b_; }      ///< nu + 1/2
    double a_strike() const noexcept { return a_; }     ///< -K^{-beta}/beta
    double y(double t) const;                           ///< -H(t)^{-beta}/beta
    double y_terminal() const noexcept { return yT_; }
    double order() const noexcept { return -nu_; }
    bool constant_barrier() const noexcept { return contract_.barrier.is_constant(); }

    const ModelCoefficients& coeffs() const noexcept { return coeffs_; }
    const BarrierContract& contract() const noexcept { return contract_; }
    const BesselBasis& basis() const noexcept { return *basis_; }
    const BasisPtr& basis_ptr() const noexcept { return basis_; }

private:
    ModelCoefficients coeffs_;
    BarrierContract contract_;
    BasisPtr basis_;
    double nu_, b_, a_, yT_;
};

/// Validates the pair (rho == 0, H(T) >= K, T > 0) and builds a basis of `basis_size` zeros.
TransformContext make_context(const ModelCoefficients& coeffs, const BarrierContract& contract,
                              int basis_size);

/// Image of the terminal payoff, u_bar(T, p) = int_a^{y(T)} [(-beta x)^{-1/beta} - K] x^{nu+1} J(xp) dx.
double terminal_image(const TransformContext& ctx, double p);

/// int_0^{y(t)} u(x) x^{nu+1} J(xp) dx by adaptive Gauss-Kronrod. Interior kinks of u
/// can be passed as breakpoints. Throws AccuracyError when the error estimate stays
/// above `tol` relative to the L1 norm of the integrand.
double forward_git(const TransformContext& ctx, const std::function<double(double)>& u, double t,
                   double p, std::span<const double> breakpoints = {}, double tol = 1e-12);

/// 2 x^{-nu}/y^2 sum_n image[n] J(mu_n x/y)/J_{+1}(mu_n)^2 with plain partial sums or the
/// mean of the partial sums. Returns 0 at x == y(t); x > y(t) is a DomainError.
double inverse_series(const TransformContext& ctx, std::span<const double> image_values, double x,
                      double t, Summation summation);

/// Psi = -y^{-nu-3} sum_n mu_n image[n] / J_{+1}(mu_n).
double barrier_gradient(const TransformContext& ctx, std::span<const double> image_values, double t);

}  // namespace lsabr
