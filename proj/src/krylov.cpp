#include "krylov.hpp"

#include <cmath>

namespace lsabr::detail {

KrylovResult bicgstab(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol, int max_iter) {
    KrylovResult res;
    const Eigen::Index n = b.size();
    res.x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Eigen::VectorXd r = b;
    const Eigen::VectorXd r0 = r;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n), s(n), t(n);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        const double rho_new = r0.dot(r);
        if (rho_new == 0.0 || omega == 0.0) break;  // breakdown
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p = r + beta * (p - omega * v);
        v.noalias() = A * p;
        const double r0v = r0.dot(v);
        if (r0v == 0.0) break;
        alpha = rho / r0v;
        s = r - alpha * v;
        if (s.norm() / bnorm <= tol) {
            res.x += alpha * p;
            res.history.push_back(s.norm() / bnorm);
            res.iterations = it;
            res.converged = true;
            return res;
        }
        t.noalias() = A * s;
        const double tt = t.squaredNorm();
        omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
        res.x += alpha * p + omega * s;
        r = s - omega * t;
        const double rel = r.norm() / bnorm;
        res.history.push_back(rel);
        res.iterations = it;
        if (!std::isfinite(rel)) break;
        if (rel <= tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

KrylovResult minimal_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol, int max_iter,
                              int restart) {
    KrylovResult res;
    const Eigen::Index n = b.size();
    res.x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    const int m = static_cast<int>(std::min<Eigen::Index>(restart, n));
    Eigen::MatrixXd V(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g(m + 1);
    int total = 0;
    while (total < max_iter) {
        Eigen::VectorXd r = b - A * res.x;
        double beta = r.norm();
        if (beta / bnorm <= tol) {
            res.converged = true;
            return res;
        }
        V.col(0) = r / beta;
        g.setZero();
        g[0] = beta;
        H.setZero();
        int k = 0;
        for (; k < m && total < max_iter; ++k, ++total) {
            Eigen::VectorXd w = A * V.col(k);
            for (int i = 0; i <= k; ++i) {  // modified Gram-Schmidt
                H(i, k) = V.col(i).dot(w);
                w -= H(i, k) * V.col(i);
            }
            H(k + 1, k) = w.norm();
            if (H(k + 1, k) > 0.0) V.col(k + 1) = w / H(k + 1, k);
            for (int i = 0; i < k; ++i) {  // apply previous rotations
                const double tmp = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = tmp;
            }
            const double denom = std::hypot(H(k, k), H(k + 1, k));
            cs[k] = denom > 0.0 ? H(k, k) / denom : 1.0;
            sn[k] = denom > 0.0 ? H(k + 1, k) / denom : 0.0;
            H(k, k) = denom;
            H(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            const double rel = std::abs(g[k + 1]) / bnorm;
            res.history.push_back(rel);
            res.iterations = total + 1;
            if (rel <= tol || !std::isfinite(rel) || denom == 0.0) {
                ++k;
                ++total;
                break;
            }
        }
        // Back substitution on the k x k upper triangle.
        Eigen::VectorXd yk = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        res.x += V.leftCols(k) * yk;
        if (!res.history.empty() && !std::isfinite(res.history.back())) return res;
        if (!res.history.empty() && res.history.back() <= tol) {
            const double true_rel = (b - A * res.x).norm() / bnorm;
            if (true_rel <= 10.0 * tol) {
                res.history.push_back(true_rel);
                res.converged = true;
                return res;
            }
        }
    }
    return res;
}

}  // namespace lsabr::detail
