#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lsabr::detail {

struct KrylovResult {
    Eigen::VectorXd x;
    std::vector<double> history;  ///< relative residual after each iteration
    int iterations = 0;
    bool converged = false;
};

/// Unpreconditioned BiCGStab from x0 = 0.
KrylovResult bicgstab(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol, int max_iter);

/// Restarted GMRES(m): minimizes the residual over the Krylov space, which is what
/// MINRES does for symmetric matrices; the collocation matrix is not symmetric.
KrylovResult minimal_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol, int max_iter,
                              int restart = 60);

}  // namespace lsabr::detail
