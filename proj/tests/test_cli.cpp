#include <doctest.h>

#include <clocale>
#include <string>

#include "config.hpp"
#include "lsabr/errors.hpp"

using namespace lsabr;
using namespace lsabr::cli;

namespace {

std::string base(const std::string& model, const std::string& contract, const std::string& extra = "") {
    return R"({"model": )" + model + R"(, "market": {"F": 60, "sigma": 0.5}, "contract": )" + contract + extra + "}";
}

const std::string kModel = R"({"beta": -0.1, "gamma1": 0.5, "gamma2": 0.3, "kappa1": 1, "kappa2": 0.2, "r0": 0.02})";
const std::string kFrozen = R"({"beta": -0.1, "r0": 0.02})";
const std::string kContract = R"({"K": [45, 50], "H": 80, "T": ["1/24", 0.25]})";

}  // namespace

TEST_CASE("a full config parses") {
    const RunConfig cfg = parse_config(base(kModel, kContract,
                                            R"(, "numerics": {"epsilon": 0.15, "modes": 100, "fd_nf": 50},
                                                 "methods": ["git", "fd"], "output": {"format": "json"})"));
    CHECK(cfg.strikes == std::vector<double>{45, 50});
    CHECK(cfg.maturities[0] == 1.0 / 24);
    CHECK(cfg.maturities[1] == 0.25);
    CHECK_FALSE(cfg.git.epsilon_auto);
    CHECK(cfg.git.lmvf.epsilon == 0.15);
    CHECK(cfg.git.lmvf.modes == 100);
    CHECK(cfg.fd.n_f == 50);
    CHECK(cfg.methods == std::vector<Method>{Method::Git, Method::Fd2d});
    CHECK(cfg.output.format == "json");
    CHECK(cfg.coeffs->gamma(0.0) == 0.5);
}

TEST_CASE("barrier and piecewise model forms") {
    const RunConfig e = parse_config(base(kModel, R"({"K": 55, "H": {"kind": "exponential", "level": 80, "growth": 0.01}, "T": 1})"));
    CHECK(e.barrier.kind == Barrier::Kind::Exponential);
    const RunConfig p = parse_config(base(
        R"({"beta": -0.4, "piecewise": {"t": [0, 0.5], "gamma": [0.4, 0.6], "kappa": [1, 1], "rate": [0.01, 0.02]}})",
        kContract));
    CHECK(p.coeffs->representation() == CoeffRepresentation::PiecewiseConstant);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, R"({"K": 55, "H": 80, "T": []})")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, R"({"K": [], "H": 80, "T": 1})")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, R"({"K": 55, "H": 80, "T": 1, "X": 2})")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(R"({"beta": -0.1, "gama1": 0.5})", kContract)), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, kContract, R"(, "numerics": {"modez": 3})")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, kContract, R"(, "numerics": {"modes": 3.5})")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, kContract, R"(, "numerics": {"solver": "cg"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, kContract, R"(, "methods": ["mc"])")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, R"({"K": 55, "H": 80, "T": "1/0"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, R"({"K": 55, "H": 80, "T": "abc"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"beta": -0.1}, "contract": {"K": 55, "H": 80, "T": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(base(kModel, kContract, R"(, "output": {"format": "xml"})")), ConfigError);
}

TEST_CASE("capability checks") {
    const RunConfig git_only = parse_config(base(kModel, kContract, R"(, "methods": ["analytic"])"));
    CHECK_THROWS_AS(check_capabilities(git_only), ConfigError);
    const RunConfig frozen = parse_config(base(kFrozen, kContract, R"(, "methods": ["analytic", "fd-1d", "fd-2d"])"));
    CHECK_NOTHROW(check_capabilities(frozen));
    const RunConfig frozen_git = parse_config(base(kFrozen, kContract, R"(, "methods": ["git"])"));
    CHECK_THROWS_AS(check_capabilities(frozen_git), ConfigError);
    const RunConfig moving = parse_config(
        base(kModel, R"({"K": 55, "H": {"kind": "linear", "level": 80, "growth": 1}, "T": 1})", R"(, "methods": ["fd"])"));
    CHECK_THROWS_AS(check_capabilities(moving), ConfigError);
}

TEST_CASE("number formatting ignores the locale") {
    const char* old = std::setlocale(LC_NUMERIC, nullptr);
    const std::string saved = old ? old : "C";
    std::setlocale(LC_NUMERIC, "de_DE.UTF-8");
    CHECK(format_number(5.0768) == "5.0768");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 24) == "0.041666666666666664");
    std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST_CASE("price_cell dispatches every method") {
    const RunConfig cfg = parse_config(base(kFrozen, R"({"K": 55, "H": 80, "T": 0.25})"));
    CHECK(price_cell(cfg, Method::AnalyticConstSigma, 55, 0.25).price == doctest::Approx(5.0768).epsilon(2e-4));
    CHECK(price_cell(cfg, Method::ThetaRepresentation, 55, 0.25).price == doctest::Approx(5.0768).epsilon(2e-4));
    CHECK(price_cell(cfg, Method::Fd1d, 55, 0.25).price == doctest::Approx(5.0768).epsilon(1e-3));
}
