#include <doctest.h>

#include <cmath>
#include <string>

#include "lsabr/errors.hpp"
#include "lsabr/fdref.hpp"
#include "lsabr/pricer.hpp"

using namespace lsabr;

namespace {

const MarketState kMarket{60.0, 0.5};

BarrierContract contract(double K, double H, double T) { return {K, Barrier::constant(H), T}; }

GitNumerics small_git() {
    GitNumerics g;
    g.lmvf.n_tau = 6;
    g.lmvf.n_z = 10;
    g.lmvf.quadrature_nodes = 151;
    g.lmvf.modes = 120;
    return g;
}

}  // namespace

TEST_CASE("Theta representation reorders the analytic series") {
    for (double beta : {-0.1, -0.4, -0.7})
        for (double K : {45.0, 55.0, 60.0, 70.0})
            for (double T : {1.0 / 24, 0.25, 2.0}) {
                // Short maturities at strongly negative beta damp slowly; both series get enough terms.
                const int terms = T < 0.1 ? 1500 : 250;
                const auto a = price_analytic_const_sigma(kMarket, contract(K, 80, T), 0.02, beta, terms);
                const auto t = price_theta_representation(kMarket, contract(K, 80, T), 0.02, beta, terms);
                CAPTURE(beta);
                CAPTURE(K);
                CAPTURE(T);
                CHECK(std::abs(a.price - t.price) <= 1e-4 * std::max(a.price, 1e-3));
            }
    CHECK(price_theta_representation(kMarket, contract(80, 80, 1.0), 0.02, -0.1, 250).price == 0.0);
}

TEST_CASE("long maturities are knocked out") {
    const auto r = price_analytic_const_sigma(kMarket, contract(55, 80, 5.0), 0.02, -0.1, 250);
    CHECK(r.price < 1e-2 * kMarket.forward);
    CHECK(r.price >= 0.0);
}

TEST_CASE("prices fall as the barrier approaches the strike") {
    for (double T : {0.25, 1.0}) {
        double prev = 1e300;
        for (double H : {100.0, 90.0, 80.0, 70.0, 65.0}) {
            const double p = price_analytic_const_sigma(kMarket, contract(55, H, T), 0.02, -0.4, 250).price;
            CHECK(p <= prev);
            prev = p;
        }
        const double near_free = price_analytic_const_sigma(kMarket, contract(55, 800, T), 0.02, -0.1, 400).price;
        const double capped = price_analytic_const_sigma(kMarket, contract(55, 80, T), 0.02, -0.1, 250).price;
        CHECK(capped >= 0.0);
        CHECK(capped <= near_free);
    }
}

TEST_CASE("GIT prices fall as the barrier approaches the strike") {
    const auto c = ModelCoefficients::exponential(-0.1, 0.5, 0.3, 1.0, 0.2, 0.02);
    double prev = 1e300;
    for (double H : {100.0, 90.0, 80.0, 70.0, 65.0}) {
        const double p = price_git(c, kMarket, contract(55, H, 0.5), small_git()).price;
        CAPTURE(H);
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("GIT is deterministic") {
    const auto c = ModelCoefficients::exponential(-0.1, 0.5, 0.3, 1.0, 0.2, 0.02);
    const auto a = price_git(c, kMarket, contract(50, 80, 0.25), small_git());
    const auto b = price_git(c, kMarket, contract(50, 80, 0.25), small_git());
    CHECK(a.price == b.price);
    CHECK(a.method == Method::Git);
    CHECK(a.modes_used == 120);
    const std::string js = to_json(a);
    for (const char* key : {"\"price\"", "\"modes_used\"", "\"elapsed_s\"", "\"warnings\""})
        CHECK(js.find(key) != std::string::npos);
}

TEST_CASE("contract validation") {
    const auto c = ModelCoefficients::exponential(-0.1, 0.5, 0.3, 1.0, 0.2, 0.02);
    CHECK_THROWS_AS(price_git(c, {85.0, 0.5}, contract(50, 80, 0.25), small_git()), ContractError);
    CHECK(price_analytic_const_sigma({85.0, 0.5}, contract(50, 80, 0.25), 0.02, -0.1, 50).price == 0.0);
    CHECK_THROWS_AS(price_analytic_const_sigma(kMarket, {50, Barrier::linear(80, 1.0), 0.25}, 0.02, -0.1, 50),
                    UnsupportedError);
    CHECK_THROWS_AS(price_analytic_const_sigma(kMarket, contract(50, 80, 0.25), 0.02, 0.3, 50), UnsupportedError);
    const auto rho = ModelCoefficients::exponential(-0.1, 0.5, 0.3, 1.0, 0.2, 0.02, -0.3);
    CHECK_THROWS_AS(price_git(rho, kMarket, contract(50, 80, 0.25), small_git()), UnsupportedError);
    CHECK(parse_method("fd") == Method::Fd2d);
    CHECK(method_name(parse_method("analytic")) == "analytic-const-sigma");
    CHECK_THROWS_AS(parse_method("mc"), ConfigError);
}
