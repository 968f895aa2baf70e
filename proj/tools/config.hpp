#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsabr/fdref.hpp"
#include "lsabr/pricer.hpp"

namespace lsabr::cli {

struct FdSettings {
    int n_f = 76;
    int n_sigma = 79;
    FDGridOptions grid;
    bool covered = true;
};

struct OutputSpec {
    std::string format = "csv";  ///< csv | json
    std::string path;            ///< empty: standard output
};

struct ConvergeSpec {
    std::vector<double> betas{-0.1, -0.4, -0.9};
    int ratio_max = 350;         ///< rows of (n, R_n) per beta
    int partial_sum_max = 500;   ///< rows of (M, Z(M)) per beta
    double eta = 0.3;
    int payoff_max = 500;        ///< rows of (N, plain, cesaro) per beta
    double payoff_forward = 60.0;
};

struct BenchSpec {
    int repeats = 5;
};

struct RunConfig {
    std::optional<ModelCoefficients> coeffs;
    MarketState market{0.0, 0.0};
    std::vector<double> strikes;
    std::vector<double> maturities;
    Barrier barrier;
    GitNumerics git;
    int analytic_terms = 250;
    FdSettings fd;
    std::vector<Method> methods;
    OutputSpec output;
    ConvergeSpec converge;
    BenchSpec bench;

    BarrierContract contract(double K, double T) const { return {K, barrier, T}; }
};

/// Parses a JSON run file. Unknown keys, missing sections and empty lists are ConfigErrors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Checks that every configured method can price this model (constant-sigma methods need
/// frozen volatility and a constant rate; FD needs a constant barrier). Throws ConfigError.
void check_capabilities(const RunConfig& cfg);

/// Prices one cell with one method.
PriceResult price_cell(const RunConfig& cfg, Method method, double K, double T);

/// Locale-independent shortest round-trip formatting.
std::string format_number(double v);

}  // namespace lsabr::cli
