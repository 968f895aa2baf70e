#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lsabr {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration (unknown key, bad node count, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested feature outside the implemented model branch.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Contract inconsistent with the model (barrier below strike, spot outside).
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quadrature or series did not reach the requested accuracy.
class AccuracyError : public std::runtime_error {
public:
    AccuracyError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Linear solve, iteration or time stepping failed. `history` holds the
/// residual (or change) sequence that led to the failure.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what, std::vector<double> history = {})
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Broken internal invariant (e.g. a Bessel zero could not be bracketed).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace lsabr
