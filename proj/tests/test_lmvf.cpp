#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "lsabr/errors.hpp"
#include "lsabr/lmvf.hpp"
#include "lsabr/pricer.hpp"

using namespace lsabr;

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

double xi_quadrature(double tau, double k, double z, double zl, double eps) {
    const double s = tau - k;
    const double prec = 1.0 / (4.0 * s) + eps;
    const double centre = (z / (4.0 * s) + eps * zl + 1.0) / prec;
    const double sd = 1.0 / std::sqrt(2.0 * prec);
    auto f = [&](double xi) { return std::exp(-(z - xi) * (z - xi) / (4.0 * s) - eps * (xi - zl) * (xi - zl) + 2.0 * xi); };
    return GK::integrate(f, centre - 12.0 * sd, centre + 12.0 * sd, 15, 1e-14) / (2.0 * std::sqrt(std::numbers::pi * s));
}

LmvfNumerics small() {
    LmvfNumerics nm;
    nm.n_tau = 6;
    nm.n_z = 8;
    nm.quadrature_nodes = 101;
    nm.modes = 30;
    nm.epsilon = 0.1;
    return nm;
}

ModelCoefficients full_model(double beta) { return ModelCoefficients::exponential(beta, 0.5, 0.3, 1.0, 0.2, 0.02); }

}  // namespace

TEST_CASE("xi integral closed form") {
    CHECK(xi_integral(0.3, 0.3, 0.2, -0.1, 0.15) ==
          doctest::Approx(std::exp(0.4 - 0.15 * 0.09)).epsilon(1e-15));
    const double got = xi_integral(0.1, 0.03, 0.2, -0.1, 0.15);
    const double ref = xi_quadrature(0.1, 0.03, 0.2, -0.1, 0.15);
    CHECK(std::abs(got - ref) <= 1e-10 * ref);
    const double got50 = xi_integral(0.1, 0.03, 0.2, 0.2, 50.0);
    const double ref50 = xi_quadrature(0.1, 0.03, 0.2, 0.2, 50.0);
    CHECK(std::abs(got50 - ref50) <= 1e-10 * ref50);
    CHECK_THROWS_AS(xi_integral(0.1, 0.2, 0.0, 0.0, 0.1), DomainError);
}

TEST_CASE("Simpson weights integrate cubics exactly") {
    for (int n : {3, 4, 7, 10, 101}) {
        const double h = 0.37;
        const auto w = simpson_weights(n, h);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = h * i;
            s += w[i] * (1.0 - 2.0 * x + 3.0 * x * x * x);
        }
        const double L = h * (n - 1);
        CAPTURE(n);
        CHECK(s == doctest::Approx(L - L * L + 0.75 * L * L * L * L).epsilon(1e-13));
    }
}

TEST_CASE("single tau node gives an empty Volterra range") {
    const auto ctx = make_context(full_model(-0.1), {55, Barrier::constant(80), 0.5}, 10);
    LmvfNumerics nm = small();
    nm.n_tau = 1;
    const RBFSystem sys = assemble_system(ctx, 0.5, nm);
    CHECK(sys.A.cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t l = 0; l < sys.n_z(); ++l)
        for (std::size_t m = 0; m < sys.n_z(); ++m) {
            const double dz = sys.z_nodes[l] - sys.z_nodes[m];
            CHECK(sys.B(l, m) == doctest::Approx(std::exp(-nm.epsilon * dz * dz)));
        }
}

TEST_CASE("Volterra matrix entry matches adaptive quadrature") {
    const auto& c = full_model(-0.1);
    const double T = 0.5;
    const auto ctx = make_context(c, {55, Barrier::constant(80), T}, 10);
    LmvfNumerics nm = small();
    nm.quadrature_nodes = 350;
    const RBFSystem sys = assemble_system(ctx, 0.5, nm);
    const std::size_t nz = sys.n_z();
    for (auto [j, l, jp, lp] : {std::array<std::size_t, 4>{5, 3, 2, 4}, {3, 0, 5, 7}, {1, 6, 1, 6}}) {
        const double tau_j = sys.tau_nodes[j], y = sys.row_y[j];
        auto f = [&](double k) {
            const double t = t_of_tau(c, k, T);
            const double g = c.gamma(t);
            const double dk = k - sys.tau_nodes[jp];
            return std::exp(-2.0 * g_of_t(c, t, T) - sys.eps_tau * dk * dk) / (y * y * g * g) *
                   xi_integral(tau_j, k, sys.z_nodes[l], sys.z_nodes[lp], sys.eps_z);
        };
        const double ref = GK::integrate(f, 0.0, tau_j, 15, 1e-13);
        CHECK(std::abs(sys.A(j * nz + l, jp * nz + lp) - ref) <= 1e-6 * std::abs(ref));
    }
}

TEST_CASE("constant barrier converges in one pass") {
    const auto ctx = make_context(full_model(-0.7), {50, Barrier::constant(80), 0.5}, 30);
    const LmvfNumerics nm = small();
    const RBFSystem sys = assemble_system(ctx, 0.5, nm);
    const IterationResult it = iterate(sys, ctx, 30, 1e-8, 50, nm);
    CHECK(it.iterations == 1);
    for (int m : {1, 7, 30}) {
        const ModeSolution direct = solve_mode(sys, ctx, m, Eigen::VectorXd(), nm);
        CHECK((direct.coefficients - it.modes[m - 1].coefficients).cwiseAbs().maxCoeff() == 0.0);
    }
    const IterationResult one = iterate(sys, ctx, 1, 1e-8, 50, nm);
    CHECK((one.modes[0].coefficients - solve_mode(sys, ctx, 1, Eigen::VectorXd(), nm).coefficients)
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("Lambda of a zero iterate vanishes") {
    const auto ctx = make_context(full_model(-0.7), {50, Barrier::linear(80, 2.0), 0.5}, 10);
    const LmvfNumerics nm = small();
    const RBFSystem sys = assemble_system(ctx, 0.5, nm);
    std::vector<ModeSolution> prev(10);
    for (int i = 0; i < 10; ++i) {
        prev[i].mode_index = i + 1;
        prev[i].coefficients = Eigen::VectorXd::Zero(sys.size());
    }
    CHECK(lambda_term(sys, ctx, prev, 3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("moving barrier iteration contracts") {
    const auto ctx = make_context(full_model(-0.7), {50, Barrier::linear(80, 2.0), 0.5}, 20);
    LmvfNumerics nm = small();
    nm.modes = 20;
    const RBFSystem sys = assemble_system(ctx, 0.5, nm);
    const IterationResult it = iterate(sys, ctx, 20, 1e-5, 50, nm);
    CHECK(it.iterations > 1);
    for (std::size_t k = 2; k < it.change_history.size(); ++k) CHECK(it.change_history[k] < it.change_history[k - 1]);
}

TEST_CASE("image evaluation reproduces the interpolant at nodes") {
    const auto ctx = make_context(full_model(-0.1), {55, Barrier::constant(80), 0.5}, 10);
    const LmvfNumerics nm = small();
    const RBFSystem sys = assemble_system(ctx, 0.5, nm);
    const ModeSolution s = solve_mode(sys, ctx, 2, Eigen::VectorXd(), nm);
    const Eigen::VectorXd nodal = sys.B * s.coefficients;
    for (std::size_t j = 0; j < sys.n_tau(); ++j)
        for (std::size_t l = 0; l < sys.n_z(); l += 3) {
            // Coefficients are large and alternate; agreement is bounded by rounding in the sum.
            const std::size_t row = j * sys.n_z() + l;
            const double scale = (sys.B.row(row).transpose().cwiseProduct(s.coefficients)).cwiseAbs().sum();
            CHECK(std::abs(evaluate_image(s, sys, sys.tau_nodes[j], sys.z_nodes[l]) - nodal[row]) <= 1e-13 * scale);
        }
    ModeSolution zero = s;
    zero.coefficients.setZero();
    CHECK(evaluate_image(zero, sys, 0.01, sys.z0 + 0.1) == 0.0);
    const double bound = s.coefficients.cwiseAbs().maxCoeff() * static_cast<double>(sys.size());
    CHECK(std::abs(evaluate_image(s, sys, 0.5 * sys.tau0, sys.z0 + 0.37)) <= bound);
}

TEST_CASE("solver and epsilon configuration") {
    CHECK(parse_solver("direct") == SolverKind::Direct);
    CHECK(solver_name(parse_solver("minres")) == "minres");
    CHECK_THROWS_AS(parse_solver("cg"), ConfigError);
    CHECK(epsilon_table(-0.1, 60, 60) == 0.02);
    CHECK(epsilon_table(-0.7, 70, 60) == 0.10);
    CHECK(epsilon_table(-0.1, 45, 60) == 0.10);
    const auto ctx = make_context(full_model(-0.1), {55, Barrier::constant(80), 0.5}, 10);
    LmvfNumerics bad = small();
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(assemble_system(ctx, 0.5, bad), ConfigError);
}
