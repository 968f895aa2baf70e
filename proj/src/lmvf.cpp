#include "lsabr/lmvf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "krylov.hpp"
#include "lsabr/errors.hpp"
#include "lsabr/simd.hpp"

namespace lsabr {

SolverKind parse_solver(const std::string& name) {
    if (name == "direct") return SolverKind::Direct;
    if (name == "bicgstab") return SolverKind::BiCGStab;
    if (name == "minres") return SolverKind::MinRes;
    throw ConfigError("unknown solver '" + name + "' (expected direct, bicgstab or minres)");
}

std::string solver_name(SolverKind kind) {
    switch (kind) {
        case SolverKind::Direct: return "direct";
        case SolverKind::BiCGStab: return "bicgstab";
        case SolverKind::MinRes: return "minres";
    }
    return "direct";
}

double xi_integral(double tau, double k, double z, double z_l, double eps) {
    if (!(k <= tau) || !(k >= 0.0)) throw DomainError("xi_integral needs 0 <= k <= tau");
    if (!(eps > 0.0)) throw DomainError("xi_integral needs eps > 0");
    const double s = tau - k;
    const double h = 1.0 + 4.0 * eps * s;
    const double d = z - z_l;
    return std::exp((-eps * d * d + 2.0 * z + 4.0 * s * (2.0 * eps * z_l + 1.0)) / h) / std::sqrt(h);
}

std::vector<double> simpson_weights(int n, double h) {
    if (n < 2) throw DomainError("simpson_weights needs at least two nodes");
    std::vector<double> w(n, 0.0);
    if (n == 2) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    int simpson_end = n - 1;  // last node covered by the 1/3 rule
    if ((n - 1) % 2 == 1) {
        simpson_end = n - 4;
        const double c = 3.0 * h / 8.0;
        w[n - 4] += c;
        w[n - 3] += 3.0 * c;
        w[n - 2] += 3.0 * c;
        w[n - 1] += c;
    }
    for (int i = 0; i + 2 <= simpson_end; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    return w;
}

namespace {

void check_numerics(const LmvfNumerics& nm) {
    if (!(nm.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (nm.epsilon_tau_scaled < 0.0) throw ConfigError("epsilon_tau must be non-negative");
    if (nm.n_tau < 1 || nm.n_z < 1) throw ConfigError("n_tau and n_z must be at least 1");
    if (!(nm.z_halfwidth > 0.0)) throw ConfigError("z_halfwidth must be positive");
    if (nm.quadrature_nodes < 3) throw ConfigError("quadrature_nodes must be at least 3");
    if (nm.modes < 1) throw ConfigError("modes must be at least 1");
    if (nm.atm_extra_node && !(nm.atm_extra_offset > 0.0))
        throw ConfigError("atm_extra_offset must be positive");
}

// Per-row quadrature data shared by the A matrix and the Lambda kernel.
struct RowQuadrature {
    std::vector<double> k, w, t;
};

RowQuadrature row_quadrature(const ModelCoefficients& c, double tau_j, double T, int nq) {
    RowQuadrature rq;
    const double h = tau_j / (nq - 1);
    rq.w = simpson_weights(nq, h);
    rq.k.resize(nq);
    rq.t.resize(nq);
    for (int q = 0; q < nq; ++q) {
        rq.k[q] = (q == nq - 1) ? tau_j : q * h;
        rq.t[q] = t_of_tau_extended(c, rq.k[q], T);
    }
    return rq;
}

// I_{l l'}(z_l, tau, k) for all l (rows) and l' (cols), row-major n_z x n_z.
void heat_block(const std::vector<double>& z, double s, double eps, std::vector<double>& arg,
                std::vector<double>& out) {
    const std::size_t nz = z.size();
    const double h = 1.0 + 4.0 * eps * s;
    const double inv_h = 1.0 / h, half_log_h = 0.5 * std::log(h);
    for (std::size_t l = 0; l < nz; ++l)
        for (std::size_t lp = 0; lp < nz; ++lp) {
            const double d = z[l] - z[lp];
            arg[l * nz + lp] = (-eps * d * d + 2.0 * z[l] + 4.0 * s * (2.0 * eps * z[lp] + 1.0)) * inv_h - half_log_h;
        }
    simd::exp(arg, out);
}

}  // namespace

RBFSystem assemble_system(const TransformContext& ctx, double sigma0, const LmvfNumerics& nm) {
    check_numerics(nm);
    const ModelCoefficients& c = ctx.coeffs();
    if (!c.positive_gamma()) throw UnsupportedError("the collocation solver needs gamma(t) > 0");
    if (!(sigma0 > 0.0)) throw DomainError("sigma must be positive");
    const double T = ctx.contract().maturity;

    RBFSystem sys;
    sys.tau0 = tau_of_t(c, 0.0, T);
    sys.z0 = std::log(sigma0) + g_of_t(c, 0.0, T);
    sys.quadrature_count = nm.quadrature_nodes;
    for (int j = 0; j < nm.n_tau; ++j)
        sys.tau_nodes.push_back(nm.n_tau == 1 ? 0.0 : sys.tau0 * j / (nm.n_tau - 1));
    if (nm.atm_extra_node) sys.tau_nodes.push_back(sys.tau0 * (1.0 + nm.atm_extra_offset));
    for (int l = 0; l < nm.n_z; ++l)
        sys.z_nodes.push_back(nm.n_z == 1 ? sys.z0
                                          : sys.z0 - nm.z_halfwidth + 2.0 * nm.z_halfwidth * l / (nm.n_z - 1));
    sys.eps_z = nm.epsilon;
    sys.eps_tau = nm.epsilon_tau_scaled > 0.0 ? nm.epsilon_tau_scaled / (sys.tau0 * sys.tau0) : nm.epsilon;

    const std::size_t nt = sys.n_tau(), nz = sys.n_z(), n = sys.size();
    sys.row_y.resize(nt);
    for (std::size_t j = 0; j < nt; ++j) sys.row_y[j] = ctx.y(t_of_tau_extended(c, sys.tau_nodes[j], T));

    sys.B.resize(n, n);
    for (std::size_t j = 0; j < nt; ++j)
        for (std::size_t l = 0; l < nz; ++l)
            for (std::size_t jp = 0; jp < nt; ++jp)
                for (std::size_t lp = 0; lp < nz; ++lp) {
                    const double dt = sys.tau_nodes[j] - sys.tau_nodes[jp];
                    const double dz = sys.z_nodes[l] - sys.z_nodes[lp];
                    sys.B(j * nz + l, jp * nz + lp) = std::exp(-sys.eps_tau * dt * dt - sys.eps_z * dz * dz);
                }

    // Row-major accumulation: A[(j,l), (j',l')] = sum_q f_q G_{q j'} I_q(l, l').
    std::vector<double> acc(n * n, 0.0);
    std::vector<double> arg(nz * nz), blk(nz * nz);
    const int nq = nm.quadrature_nodes;
    for (std::size_t j = 0; j < nt; ++j) {
        const double tau_j = sys.tau_nodes[j];
        if (tau_j <= 0.0) continue;
        const RowQuadrature rq = row_quadrature(c, tau_j, T, nq);
        const double inv_y2 = 1.0 / (sys.row_y[j] * sys.row_y[j]);
        for (int q = 0; q < nq; ++q) {
            const double gam = c.gamma(rq.t[q]);
            const double f = rq.w[q] * std::exp(-2.0 * g_of_t_extended(c, rq.t[q], T)) * inv_y2 / (gam * gam);
            if (f == 0.0) continue;
            heat_block(sys.z_nodes, tau_j - rq.k[q], sys.eps_z, arg, blk);
            for (std::size_t jp = 0; jp < nt; ++jp) {
                const double dk = rq.k[q] - sys.tau_nodes[jp];
                const double coef = f * std::exp(-sys.eps_tau * dk * dk);
                if (coef == 0.0) continue;
                for (std::size_t l = 0; l < nz; ++l)
                    simd::axpy(coef, std::span<const double>(blk.data() + l * nz, nz),
                               std::span<double>(acc.data() + (j * nz + l) * n + jp * nz, nz));
            }
        }
    }
    sys.A = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(acc.data(), n, n);

    const double rc = sys.B.partialPivLu().rcond();
    sys.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (sys.condition_estimate > 1e16) {
        std::ostringstream os;
        os << "kernel matrix is ill-conditioned (estimated condition " << sys.condition_estimate << ")";
        sys.warnings.push_back(os.str());
    }
    return sys;
}

Eigen::VectorXd terminal_rhs(const RBFSystem& system, const TransformContext& ctx, int mode) {
    const BesselBasis& basis = ctx.basis();
    if (mode < 1 || mode > static_cast<int>(basis.count())) throw DomainError("mode outside the basis");
    const double mu = basis.zeros[mode - 1];
    const std::size_t nz = system.n_z();
    Eigen::VectorXd rhs(system.size());
    for (std::size_t j = 0; j < system.n_tau(); ++j) {
        const double v = terminal_image(ctx, mu / system.row_y[j]);
        for (std::size_t l = 0; l < nz; ++l) rhs[j * nz + l] = v;
    }
    return rhs;
}

ModeSolution solve_mode(const RBFSystem& system, const TransformContext& ctx, int mode,
                        const Eigen::VectorXd& extra_rhs, const LmvfNumerics& numerics) {
    const std::size_t n = system.size();
    if (extra_rhs.size() != 0 && static_cast<std::size_t>(extra_rhs.size()) != n)
        throw DomainError("extra_rhs length does not match the collocation system");
    const BesselBasis& basis = ctx.basis();
    ModeSolution sol;
    sol.mode_index = mode;
    sol.scale = numerics.rescale ? basis.ratios[mode - 1] : 1.0;
    Eigen::VectorXd rhs = terminal_rhs(system, ctx, mode) / sol.scale;
    if (extra_rhs.size() != 0) rhs += extra_rhs;

    const double mu = basis.zeros[mode - 1];
    Eigen::MatrixXd M = system.B + (mu * mu) * system.A;
    const double tol = numerics.effective_solver_tol();
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        sol.coefficients = Eigen::VectorXd::Zero(n);
        return sol;
    }

    if (numerics.solver == SolverKind::Direct) {
        auto relres = [&](const Eigen::MatrixXd& mat, const Eigen::VectorXd& x) {
            return (mat * x - rhs).norm() / rhs_norm;
        };
        // Normwise backward error in the infinity norm; LU with partial pivoting keeps it
        // near machine precision even when cond(M) is beyond 1/eps.
        auto backward = [&](const Eigen::MatrixXd& mat, const Eigen::VectorXd& x) {
            const double mnorm = mat.cwiseAbs().rowwise().sum().maxCoeff();
            return (mat * x - rhs).lpNorm<Eigen::Infinity>() /
                   (mnorm * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>());
        };
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        Eigen::VectorXd x = lu.solve(rhs);
        double res = relres(M, x);
        const double rc = lu.rcond();
        sol.residual_history.push_back(res);
        if (!x.allFinite() || !(backward(M, x) <= tol) || rc < std::numeric_limits<double>::epsilon()) {
            // Scaled by the solved matrix so the shift stays relative as mu_i^2 A grows.
            const double lambda = 1e-12 * M.trace() / static_cast<double>(n);
            M.diagonal().array() += lambda;
            Eigen::PartialPivLU<Eigen::MatrixXd> lur(M);
            x = lur.solve(rhs);
            res = relres(M, x);
            sol.regularized = true;
            sol.residual_history.push_back(res);
            const double eta = backward(M, x);
            if (!x.allFinite() || !(eta <= tol)) {
                std::ostringstream os;
                os << "direct solve failed for mode " << mode << " even with Tikhonov regularization "
                   << "(backward error " << eta << ")";
                throw NumericalFailure(os.str(), sol.residual_history);
            }
        }
        sol.coefficients = std::move(x);
        sol.residual_norm = res;
        sol.solver_iterations = 1;
        return sol;
    }

    detail::KrylovResult kr = numerics.solver == SolverKind::BiCGStab
                                  ? detail::bicgstab(M, rhs, tol, numerics.krylov_max_iter)
                                  : detail::minimal_residual(M, rhs, tol, numerics.krylov_max_iter);
    if (!kr.converged) {
        std::ostringstream os;
        os << solver_name(numerics.solver) << " did not converge for mode " << mode << " (relative residual "
           << (kr.history.empty() ? 0.0 : kr.history.back()) << " after " << kr.iterations << " iterations)";
        throw NumericalFailure(os.str(), kr.history);
    }
    sol.coefficients = std::move(kr.x);
    sol.residual_norm = kr.history.empty() ? 0.0 : kr.history.back();
    sol.solver_iterations = kr.iterations;
    sol.residual_history = std::move(kr.history);
    return sol;
}

LambdaKernel::LambdaKernel(const RBFSystem& system, const TransformContext& ctx, int modes)
    : system_(&system), modes_(modes), nq_(system.quadrature_count) {
    const ModelCoefficients& c = ctx.coeffs();
    const BesselBasis& basis = ctx.basis();
    if (modes < 1 || modes > static_cast<int>(basis.count())) throw DomainError("mode count exceeds the basis");
    const double T = ctx.contract().maturity, nu = ctx.nu(), order = ctx.order();
    const std::size_t nt = system.n_tau(), nz = system.n_z(), nq = nq_;

    weight_.assign(nt * nq, 0.0);
    kernel_.assign(nt * nq * nz * nz, 0.0);
    gauss_.assign(nt * nq * nt, 0.0);
    bessel_.assign(static_cast<std::size_t>(modes) * nt * nq, 0.0);
    mode_weight_.resize(modes);
    for (int i = 0; i < modes; ++i) mode_weight_[i] = basis.zeros[i] / basis.j_plus_one[i];

    std::vector<double> arg(nz * nz);
    for (std::size_t j = 0; j < nt; ++j) {
        const double tau_j = system.tau_nodes[j];
        if (tau_j <= 0.0) continue;
        const RowQuadrature rq = row_quadrature(c, tau_j, T, nq_);
        const double yj = system.row_y[j];
        for (std::size_t q = 0; q < nq; ++q) {
            const double gam = c.gamma(rq.t[q]);
            const double yk = ctx.y(rq.t[q]);
            weight_[j * nq + q] = rq.w[q] * std::pow(yj, nu + 1.0) /
                                  (std::pow(yk, nu + 3.0) * gam * gam *
                                   std::exp(2.0 * g_of_t_extended(c, rq.t[q], T)));
            std::vector<double> blk(nz * nz);
            heat_block(system.z_nodes, tau_j - rq.k[q], system.eps_z, arg, blk);
            std::copy(blk.begin(), blk.end(), kernel_.begin() + (j * nq + q) * nz * nz);
            for (std::size_t jp = 0; jp < nt; ++jp) {
                const double dk = rq.k[q] - system.tau_nodes[jp];
                gauss_[(j * nq + q) * nt + jp] = std::exp(-system.eps_tau * dk * dk);
            }
            const double ratio = yk / yj;
            for (int i = 0; i < modes; ++i)
                bessel_[(static_cast<std::size_t>(i) * nt + j) * nq + q] = bessel_j(order, basis.zeros[i] * ratio);
        }
    }
}

std::vector<Eigen::VectorXd> LambdaKernel::evaluate(const std::vector<ModeSolution>& prev) const {
    const RBFSystem& sys = *system_;
    const std::size_t nt = sys.n_tau(), nz = sys.n_z(), n = sys.size(), nq = nq_;
    if (prev.size() < static_cast<std::size_t>(modes_)) throw DomainError("previous iterate has too few modes");

    // S = sum_n (mu_n / J_{+1}(mu_n)) * (unscaled coefficients of mode n).
    std::vector<double> S(n, 0.0);
    for (int i = 0; i < modes_; ++i) {
        const double f = mode_weight_[i] * prev[i].scale;
        simd::axpy(f, std::span<const double>(prev[i].coefficients.data(), n), S);
    }

    // P[(j,l), q] = sum_{l'} I_q(l,l') sum_{j'} G_{q j'} S_{j' l'}.
    std::vector<double> P(n * nq, 0.0), Tq(nz);
    for (std::size_t j = 0; j < nt; ++j) {
        if (sys.tau_nodes[j] <= 0.0) continue;
        for (std::size_t q = 0; q < nq; ++q) {
            std::fill(Tq.begin(), Tq.end(), 0.0);
            for (std::size_t jp = 0; jp < nt; ++jp)
                simd::axpy(gauss_[(j * nq + q) * nt + jp], std::span<const double>(S.data() + jp * nz, nz), Tq);
            const double* blk = kernel_.data() + (j * nq + q) * nz * nz;
            for (std::size_t l = 0; l < nz; ++l)
                P[(j * nz + l) * nq + q] = simd::dot(std::span<const double>(blk + l * nz, nz), Tq);
        }
    }

    std::vector<Eigen::VectorXd> out(modes_, Eigen::VectorXd::Zero(n));
    std::vector<double> wj(nq);
    for (int i = 0; i < modes_; ++i) {
        Eigen::VectorXd& lam = out[i];
        for (std::size_t j = 0; j < nt; ++j) {
            if (sys.tau_nodes[j] <= 0.0) continue;
            const double* bj = bessel_.data() + (static_cast<std::size_t>(i) * nt + j) * nq;
            for (std::size_t q = 0; q < nq; ++q) wj[q] = weight_[j * nq + q] * bj[q];
            for (std::size_t l = 0; l < nz; ++l)
                lam[j * nz + l] = -2.0 * simd::dot(wj, std::span<const double>(P.data() + (j * nz + l) * nq, nq));
        }
        lam /= prev[i].scale;
    }
    return out;
}

Eigen::VectorXd lambda_term(const RBFSystem& system, const TransformContext& ctx,
                            const std::vector<ModeSolution>& prev, int mode) {
    const int modes = static_cast<int>(prev.size());
    if (mode < 1 || mode > modes) throw DomainError("mode outside the previous iterate");
    LambdaKernel kernel(system, ctx, modes);
    return kernel.evaluate(prev)[mode - 1];
}

namespace {

// Solves modes 1..M, in parallel when threads > 1. Results land in fixed slots.
std::vector<ModeSolution> solve_all(const RBFSystem& system, const TransformContext& ctx, int modes,
                                    const std::vector<Eigen::VectorXd>* extra, const LmvfNumerics& nm) {
    std::vector<ModeSolution> out(modes);
    const Eigen::VectorXd none;
    auto work = [&](int i) { out[i] = solve_mode(system, ctx, i + 1, extra ? (*extra)[i] : none, nm); };
    const int threads = std::max(1, std::min(nm.threads, modes));
    if (threads == 1) {
        for (int i = 0; i < modes; ++i) work(i);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex fail_mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < modes; i = next++) {
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(fail_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace

IterationResult iterate(const RBFSystem& system, const TransformContext& ctx, int modes, double tol,
                        int max_iter, const LmvfNumerics& numerics) {
    if (modes < 1 || modes > static_cast<int>(ctx.basis().count())) throw DomainError("mode count exceeds the basis");
    if (max_iter < 1) throw ConfigError("max_iterations must be at least 1");
    IterationResult res;
    res.modes = solve_all(system, ctx, modes, nullptr, numerics);
    res.iterations = 1;
    if (ctx.constant_barrier()) return res;

    const LambdaKernel kernel(system, ctx, modes);
    for (int it = 2; it <= max_iter; ++it) {
        const std::vector<Eigen::VectorXd> lam = kernel.evaluate(res.modes);
        std::vector<ModeSolution> next = solve_all(system, ctx, modes, &lam, numerics);
        double diff = 0.0, ref = 0.0;
        for (int i = 0; i < modes; ++i) {
            diff = std::max(diff, (next[i].coefficients - res.modes[i].coefficients).lpNorm<Eigen::Infinity>());
            ref = std::max(ref, res.modes[i].coefficients.lpNorm<Eigen::Infinity>());
        }
        const double change = ref > 0.0 ? diff / ref : diff;
        res.change_history.push_back(change);
        res.modes = std::move(next);
        res.iterations = it;
        if (change < tol) return res;
        if (!std::isfinite(change)) break;
    }
    std::ostringstream os;
    os << "fixed-point iteration did not reach " << tol << " within " << max_iter << " iterations";
    throw NumericalFailure(os.str(), res.change_history);
}

double evaluate_image(const ModeSolution& solution, const RBFSystem& system, double tau, double z) {
    const std::size_t nt = system.n_tau(), nz = system.n_z();
    if (static_cast<std::size_t>(solution.coefficients.size()) != nt * nz)
        throw DomainError("solution does not match the collocation system");
    std::vector<double> ez(nz);
    for (std::size_t l = 0; l < nz; ++l) {
        const double d = z - system.z_nodes[l];
        ez[l] = std::exp(-system.eps_z * d * d);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
        const double d = tau - system.tau_nodes[j];
        const double et = std::exp(-system.eps_tau * d * d);
        double row = 0.0;
        for (std::size_t l = 0; l < nz; ++l) row += solution.coefficients[j * nz + l] * ez[l];
        sum += et * row;
    }
    return sum;
}

}  // namespace lsabr
