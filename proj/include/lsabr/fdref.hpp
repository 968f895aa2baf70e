#pragma once

#include <span>
#include <vector>

#include "lsabr/pricer.hpp"

namespace lsabr {

/// Tensor grid for the finite-difference reference solvers.
/// Invariants: f_nodes strictly increasing, f_nodes.front() == 0, f_nodes.back() == H.
struct FDGrid {
    std::vector<double> f_nodes;
    std::vector<double> sigma_nodes;
    double dt = 0.0;
    int rannacher_steps = 2;
    int n_f = 0;
    int n_sigma = 0;
};

struct FDGridOptions {
    double f_stretch = 8.0;       ///< 0 gives a uniform grid; larger values pack nodes tighter
    double barrier_weight = 1.0;  ///< relative node density at H versus F0 (0: F0 only)
    double sigma_stretch = 4.0;   ///< sigma nodes cluster around sigma0
    double dt = 0.0;              ///< 0 selects min(0.01, T/50)
    int rannacher_steps = 2;
};

struct NodeCluster {
    double center;
    double weight;
};

/// Equidistributes the density sum_k w_k / sqrt(1 + ((x - a_k)/c)^2), c = (hi - lo)/stretch.
/// A single cluster gives the usual sinh map; stretch 0 gives uniform nodes.
std::vector<double> sinh_nodes(double lo, double hi, int n, double stretch, std::span<const NodeCluster> clusters);

/// F in [0, H] packed around F0 and the barrier, sigma in [1e-3, max(4 sigma0, 2)] packed around sigma0.
FDGrid build_grid(const MarketState& market, const BarrierContract& contract, int n_f, int n_sigma,
                  const FDGridOptions& options = {});

/// Crank-Nicolson in time after Rannacher startup; constant sigma and rate.
/// The covered form solves for C - F + K.
PriceResult solve_fd_1d(const MarketState& market, const BarrierContract& contract, double rate, double beta,
                        const FDGrid& grid, bool covered = true);

/// Hundsdorfer-Verwer ADI (theta = 1/2) for the two-factor pricing PDE. Coefficients are
/// averaged over each step from their exact integrals.
PriceResult solve_fd_2d(const ModelCoefficients& coeffs, const MarketState& market,
                        const BarrierContract& contract, const FDGrid& grid, bool covered = true);

}  // namespace lsabr
