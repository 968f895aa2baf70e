#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "lsabr/transform.hpp"

namespace lsabr {

enum class SolverKind { Direct, BiCGStab, MinRes };

/// Collocation and solver settings for the Volterra-Fredholm image equation.
struct LmvfNumerics {
    int n_tau = 10;
    int n_z = 20;
    double z_halfwidth = 0.5;
    double epsilon = 0.1;            ///< Gaussian shape; used in both tau and z unless overridden
    double epsilon_tau_scaled = 0.0; ///< > 0: tau shape = value / tau(0)^2 (normalized-time shape)
    int quadrature_nodes = 350;      ///< Simpson nodes per row on [0, tau_j]
    int modes = 350;
    SolverKind solver = SolverKind::Direct;
    double solver_tol = 0.0;         ///< 0 selects 1e-10 (direct) or 1e-8 (iterative)
    int krylov_max_iter = 2000;
    int max_iterations = 50;         ///< fixed-point iterations for a moving barrier
    double iteration_tol = 1e-5;     ///< relative; coefficient noise from the ill-conditioned solves sits near 1e-6
    bool rescale = true;             ///< solve for w / R_i instead of w
    bool atm_extra_node = false;
    double atm_extra_offset = 0.1;   ///< extra node at tau(0) (1 + offset)
    int threads = 1;

    double effective_solver_tol() const {
        return solver_tol > 0.0 ? solver_tol : (solver == SolverKind::Direct ? 1e-10 : 1e-8);
    }
};

SolverKind parse_solver(const std::string& name);
std::string solver_name(SolverKind kind);

/// Nodes, shapes and the two collocation matrices. Immutable after assembly.
/// Unknown (j, l) sits at index j * n_z + l.
struct RBFSystem {
    std::vector<double> tau_nodes;
    std::vector<double> z_nodes;
    double eps_tau = 0.0;
    double eps_z = 0.0;
    double tau0 = 0.0;  ///< tau(0): evaluation time of the price
    double z0 = 0.0;    ///< log sigma_0 + g(0)
    int quadrature_count = 0;
    std::vector<double> row_y;  ///< y(t(tau_j)) per tau node
    Eigen::MatrixXd B;
    Eigen::MatrixXd A;
    double condition_estimate = 0.0;  ///< 1-norm condition estimate of B
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return tau_nodes.size() * z_nodes.size(); }
    std::size_t n_tau() const noexcept { return tau_nodes.size(); }
    std::size_t n_z() const noexcept { return z_nodes.size(); }
};

struct ModeSolution {
    int mode_index = 0;            ///< 1-based
    Eigen::VectorXd coefficients;  ///< coefficients of w / scale
    double scale = 1.0;            ///< R_i when rescaled, else 1
    double residual_norm = 0.0;    ///< relative residual of the system actually solved
    int solver_iterations = 0;
    bool regularized = false;
    std::vector<double> residual_history;
};

struct IterationResult {
    std::vector<ModeSolution> modes;
    int iterations = 0;
    std::vector<double> change_history;  ///< max relative coefficient change per iteration
};

/// (1/(2 sqrt(pi (tau-k)))) int exp(-(z-xi)^2/(4(tau-k)) - eps (xi-z_l)^2 + 2 xi) dxi in closed form.
double xi_integral(double tau, double k, double z, double z_l, double eps);

/// Composite Simpson weights for n uniform nodes on [0, h (n-1)]; a 3/8 panel closes an
/// even node count.
std::vector<double> simpson_weights(int n, double h);

RBFSystem assemble_system(const TransformContext& ctx, double sigma0, const LmvfNumerics& numerics);

/// u_bar(T, mu_i / y(tau_j)) stacked over the nodes (constant in z).
Eigen::VectorXd terminal_rhs(const RBFSystem& system, const TransformContext& ctx, int mode);

/// Solves (B + mu_i^2 A) C = u_bar / scale + extra_rhs; extra_rhs is already in scaled units.
ModeSolution solve_mode(const RBFSystem& system, const TransformContext& ctx, int mode,
                        const Eigen::VectorXd& extra_rhs, const LmvfNumerics& numerics);

/// Precomputed pieces of the Fredholm coupling for a moving barrier (shared across iterations).
class LambdaKernel {
public:
    LambdaKernel(const RBFSystem& system, const TransformContext& ctx, int modes);
    /// Lambda for every mode 1..modes from the previous iterate.
    std::vector<Eigen::VectorXd> evaluate(const std::vector<ModeSolution>& prev) const;

private:
    const RBFSystem* system_;
    int modes_;
    int nq_;
    std::vector<double> weight_;  ///< [j][q]: Simpson weight times y^{nu+1}(tau_j)/(y^{nu+3} gamma^2 e^{2g})(k_q)
    std::vector<double> kernel_;  ///< [j][q][l][l']: I(z_l, tau_j, k_q) against node z_l'
    std::vector<double> gauss_;   ///< [j][q][j']: e^{-eps_t (k_q - tau_j')^2}
    std::vector<double> bessel_;  ///< [i][j][q]: J(mu_i y(k_q)/y(tau_j))
    std::vector<double> mode_weight_;  ///< mu_n / J_{+1}(mu_n)
};

/// Lambda for one mode; builds a LambdaKernel internally.
Eigen::VectorXd lambda_term(const RBFSystem& system, const TransformContext& ctx,
                            const std::vector<ModeSolution>& prev, int mode);

/// Fixed-point loop over Lambda. A constant barrier returns after exactly one pass.
IterationResult iterate(const RBFSystem& system, const TransformContext& ctx, int modes, double tol,
                        int max_iter, const LmvfNumerics& numerics);

/// sum c_{jl} exp(-eps_t (tau - tau_j)^2 - eps_z (z - z_l)^2), i.e. w / scale.
double evaluate_image(const ModeSolution& solution, const RBFSystem& system, double tau, double z);

}  // namespace lsabr
