#include "lsabr/fdref.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

#include "lsabr/errors.hpp"
#include "lsabr/simd.hpp"
#include "result_checks.hpp"

namespace lsabr {

namespace {

constexpr double kSigmaMin = 1e-3;

using Clock = std::chrono::steady_clock;

// Three-point weights on a nonuniform stencil for the first and second derivative at x_i.
struct Stencil {
    double l = 0.0, c = 0.0, u = 0.0;
};

Stencil second_derivative(double hm, double hp) {
    return {2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))};
}

Stencil first_derivative(double hm, double hp) {
    return {-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))};
}

// 4-point Lagrange weights at x on nodes[k..k+3].
std::size_t lagrange4(const std::vector<double>& nodes, double x, std::array<double, 4>& w) {
    const std::size_t n = nodes.size();
    std::size_t hi = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin());
    std::size_t k = hi >= 2 ? hi - 2 : 0;
    k = std::min(k, n - 4);
    for (int a = 0; a < 4; ++a) {
        double v = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) v *= (x - nodes[k + b]) / (nodes[k + a] - nodes[k + b]);
        w[a] = v;
    }
    return k;
}

int step_count(double T, double dt) { return std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9))); }

void check_grid(const FDGrid& g, const BarrierContract& contract) {
    if (g.f_nodes.size() < 10) throw ConfigError("FD grid needs at least 10 forward nodes");
    if (!(g.dt > 0.0)) throw ConfigError("FD time step must be positive");
    if (g.rannacher_steps < 0) throw ConfigError("Rannacher step count must be nonnegative");
    if (g.f_nodes.back() != contract.barrier.level) throw ContractError("last forward node must equal the barrier");
}

double payoff(double f, double K, double H, bool covered) {
    if (f >= H) return covered ? K - H : 0.0;
    const double call = std::max(f - K, 0.0);
    return covered ? call + K - f : call;
}

// Payoff averaged over the control cell of each node; removes the dependence on where K
// falls between nodes.
std::vector<double> cell_payoff(const std::vector<double>& F, double K, double H, bool covered) {
    const std::size_t n = F.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = payoff(F[i], K, H, covered);
        if (i == 0 || i + 1 == n) continue;
        const double lo = 0.5 * (F[i - 1] + F[i]), hi = 0.5 * (F[i] + F[i + 1]);
        if (K <= lo || K >= hi) continue;
        // Both payoff forms are linear on each side of K; (hi-K)^2 / 2 is the kink area.
        const double call = 0.5 * (hi - K) * (hi - K) / (hi - lo);
        v[i] = covered ? call + K - F[i] : call;
    }
    return v;
}

void check_growth(const std::vector<double>& u, double bound, int step) {
    for (double v : u) {
        if (!std::isfinite(v) || std::abs(v) > bound) {
            std::ostringstream os;
            os << "FD solution diverged at step " << step;
            throw NumericalFailure(os.str(), {});
        }
    }
}

}  // namespace

std::vector<double> sinh_nodes(double lo, double hi, int n, double stretch, std::span<const NodeCluster> clusters) {
    if (n < 2) throw ConfigError("need at least two nodes");
    if (!(hi > lo)) throw ConfigError("empty node interval");
    if (stretch < 0.0) throw ConfigError("stretch must be nonnegative");
    std::vector<double> x(n);
    if (stretch == 0.0 || clusters.empty()) {
        for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
        return x;
    }
    // Node density sum_k w_k / sqrt(1 + ((x - a_k)/c)^2); its primitive is monotone.
    const double c = (hi - lo) / stretch;
    auto primitive = [&](double v) {
        double p = 0.0;
        for (const NodeCluster& k : clusters) p += k.weight * std::asinh((v - k.center) / c);
        return p;
    };
    const double p0 = primitive(lo), p1 = primitive(hi);
    if (!(p1 > p0)) throw ConfigError("cluster weights must be positive");
    x.front() = lo;
    x.back() = hi;
    for (int i = 1; i + 1 < n; ++i) {
        const double target = p0 + (p1 - p0) * i / (n - 1);
        double a = lo, b = hi;
        for (int it = 0; it < 200 && b - a > 1e-15 * (hi - lo); ++it) {
            const double m = 0.5 * (a + b);
            (primitive(m) < target ? a : b) = m;
        }
        x[i] = 0.5 * (a + b);
    }
    return x;
}

FDGrid build_grid(const MarketState& market, const BarrierContract& contract, int n_f, int n_sigma,
                  const FDGridOptions& options) {
    if (n_f < 10 || n_sigma < 10) throw ConfigError("FD grid needs at least 10 nodes per direction");
    if (!contract.barrier.is_constant()) throw UnsupportedError("FD solvers need a constant barrier");
    if (!(contract.maturity > 0.0)) throw DomainError("maturity must be positive");
    const double H = contract.barrier.level;
    if (!(market.forward > 0.0 && market.forward < H)) throw ContractError("forward must lie in (0, H)");
    if (!(market.sigma > 0.0)) throw DomainError("sigma must be positive");
    FDGrid g;
    g.n_f = n_f;
    g.n_sigma = n_sigma;
    const NodeCluster f_clusters[2] = {{market.forward, 1.0}, {H, options.barrier_weight}};
    g.f_nodes = sinh_nodes(0.0, H, n_f, options.f_stretch, f_clusters);
    const double smax = std::max(4.0 * market.sigma, 2.0);
    const NodeCluster s_cluster[1] = {{market.sigma, 1.0}};
    g.sigma_nodes = sinh_nodes(kSigmaMin, smax, n_sigma, options.sigma_stretch, s_cluster);
    g.dt = options.dt > 0.0 ? options.dt : std::min(0.01, contract.maturity / 50.0);
    g.rannacher_steps = options.rannacher_steps;
    return g;
}

PriceResult solve_fd_1d(const MarketState& market, const BarrierContract& contract, double rate, double beta,
                        const FDGrid& grid, bool covered) {
    const auto t0 = Clock::now();
    check_grid(grid, contract);
    if (!(beta > -1.0 && beta < 0.0)) throw UnsupportedError("beta must lie in (-1, 0)");
    const std::vector<double>& F = grid.f_nodes;
    const std::size_t n = F.size();
    const double K = contract.strike, H = contract.barrier.level, T = contract.maturity;

    // L = 1/2 sigma^2 F^{2(beta+1)} d2/dF2 - r on interior nodes.
    std::vector<Stencil> L(n);
    std::vector<double> src(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double a = 0.5 * market.sigma * market.sigma * std::pow(F[i], 2.0 * (beta + 1.0));
        const Stencil d2 = second_derivative(F[i] - F[i - 1], F[i + 1] - F[i]);
        L[i] = {a * d2.l, a * d2.c - rate, a * d2.u};
        if (covered) src[i] = -rate * (F[i] - K);
    }
    std::vector<double> u = cell_payoff(F, K, H, covered), rhs(n), lo(n), di(n), up(n), work(n);
    const double bound = 100.0 * (H + K);
    const auto& kernels = simd::active();

    // (I - theta h L) u_new = (I + (1 - theta) h L) u + h src; boundary rows keep their values.
    auto step = [&](double h, double theta) {
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 0 || i + 1 == n) {
                lo[i] = up[i] = 0.0;
                di[i] = 1.0;
                rhs[i] = u[i];
                continue;
            }
            const double e = (1.0 - theta) * h;
            rhs[i] = u[i] + e * (L[i].l * u[i - 1] + L[i].c * u[i] + L[i].u * u[i + 1]) + h * src[i];
            lo[i] = -theta * h * L[i].l;
            di[i] = 1.0 - theta * h * L[i].c;
            up[i] = -theta * h * L[i].u;
        }
        kernels.tridiag(lo.data(), di.data(), up.data(), rhs.data(), work.data(), n, 1);
        u.swap(rhs);
    };

    const int steps = step_count(T, grid.dt);
    const double dt = T / steps;
    const int startup = std::min(grid.rannacher_steps, steps);
    for (int s = 0; s < steps; ++s) {
        if (s < startup) {
            step(0.5 * dt, 1.0);
            step(0.5 * dt, 1.0);
        } else {
            step(dt, 0.5);
        }
        check_growth(u, bound, s);
    }

    std::array<double, 4> w{};
    const std::size_t k = lagrange4(F, market.forward, w);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) v += w[a] * u[k + a];
    PriceResult r;
    r.method = Method::Fd1d;
    r.price = covered ? v + market.forward - K : v;
    r.modes_used = static_cast<int>(n);
    r.iterations = steps;
    detail::finalize_price(r, market.forward);
    r.elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

namespace {

// Two-factor state U[j * nF + i] (i: forward, j: sigma) and the split operators.
class AdiSolver {
public:
    AdiSolver(const ModelCoefficients& coeffs, const BarrierContract& contract, const FDGrid& grid, bool covered)
        : c_(coeffs), F_(grid.f_nodes), S_(grid.sigma_nodes), nF_(F_.size()), nS_(S_.size()),
          K_(contract.strike), covered_(covered) {
        const double beta = coeffs.beta();
        const std::size_t N = nF_ * nS_;
        a1_base_.resize(N);
        for (std::size_t j = 0; j < nS_; ++j)
            for (std::size_t i = 1; i + 1 < nF_; ++i) {
                const double a = 0.5 * S_[j] * S_[j] * std::pow(F_[i], 2.0 * (beta + 1.0));
                const Stencil d2 = second_derivative(F_[i] - F_[i - 1], F_[i + 1] - F_[i]);
                a1_base_[j * nF_ + i] = {a * d2.l, a * d2.c, a * d2.u};
            }
        fb_.resize(nF_);
        for (std::size_t i = 0; i < nF_; ++i) fb_[i] = std::pow(F_[i], beta + 1.0);
        a2_.resize(nS_);
        au_.resize(N);
        bu_.resize(N);
        cu_.resize(N);
        fu_.resize(N);
        y0_.resize(N);
        y1_.resize(N);
        y2_.resize(N);
        lo_.resize(N);
        di_.resize(N);
        up_.resize(N);
        tr_.resize(N);
        work_.resize(N);
    }

    void set_coefficients(double t_lo, double t_hi) {
        const double h = t_hi - t_lo;
        r_ = c_.rate_integral(t_lo, t_hi) / h;
        const double g2 = 2.0 * c_.half_gamma_sq_integral(t_lo, t_hi) / h;
        const double kap = c_.kappa_integral(t_lo, t_hi) / h;
        rho_gamma_ = c_.rho(0.5 * (t_lo + t_hi)) * std::sqrt(g2);
        for (std::size_t j = 0; j < nS_; ++j) {
            Stencil s{};
            const double sig = S_[j], drift = -kap * sig;
            if (j == 0) {
                // Degenerate edge: sigma-derivatives dropped.
            } else if (j + 1 == nS_) {
                const double hm = S_[j] - S_[j - 1];
                if (drift < 0.0) s = {-drift / hm, drift / hm, 0.0};
            } else {
                const double hm = S_[j] - S_[j - 1], hp = S_[j + 1] - S_[j];
                const double diff = 0.5 * g2 * sig * sig;
                const Stencil d2 = second_derivative(hm, hp);
                s = {diff * d2.l, diff * d2.c, diff * d2.u};
                if (std::abs(drift) * std::max(hm, hp) <= 2.0 * diff) {
                    const Stencil d1 = first_derivative(hm, hp);
                    s.l += drift * d1.l;
                    s.c += drift * d1.c;
                    s.u += drift * d1.u;
                } else if (drift < 0.0) {
                    s.l += -drift / hm;
                    s.c += drift / hm;
                } else {
                    s.c += -drift / hp;
                    s.u += drift / hp;
                }
            }
            a2_[j] = s;
        }
    }

    // out = A1 u (forward direction, half the discount).
    void apply_a1(const std::vector<double>& u, std::vector<double>& out) const {
        for (std::size_t j = 0; j < nS_; ++j) {
            const std::size_t row = j * nF_;
            out[row] = out[row + nF_ - 1] = 0.0;
            for (std::size_t i = 1; i + 1 < nF_; ++i) {
                const Stencil& s = a1_base_[row + i];
                out[row + i] = s.l * u[row + i - 1] + (s.c - 0.5 * r_) * u[row + i] + s.u * u[row + i + 1];
            }
        }
    }

    // out = A2 u (sigma direction, half the discount).
    void apply_a2(const std::vector<double>& u, std::vector<double>& out) const {
        for (std::size_t j = 0; j < nS_; ++j) {
            const Stencil& s = a2_[j];
            const std::size_t row = j * nF_;
            out[row] = out[row + nF_ - 1] = 0.0;
            for (std::size_t i = 1; i + 1 < nF_; ++i) {
                double v = (s.c - 0.5 * r_) * u[row + i];
                if (j > 0) v += s.l * u[row + i - nF_];
                if (j + 1 < nS_) v += s.u * u[row + i + nF_];
                out[row + i] = v;
            }
        }
    }

    // Mixed term plus the covered-call source.
    void apply_a0(const std::vector<double>& u, std::vector<double>& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        if (covered_)
            for (std::size_t j = 0; j < nS_; ++j)
                for (std::size_t i = 1; i + 1 < nF_; ++i) out[j * nF_ + i] = -r_ * (F_[i] - K_);
        if (rho_gamma_ == 0.0) return;
        for (std::size_t j = 1; j + 1 < nS_; ++j) {
            const Stencil ds = first_derivative(S_[j] - S_[j - 1], S_[j + 1] - S_[j]);
            for (std::size_t i = 1; i + 1 < nF_; ++i) {
                const Stencil df = first_derivative(F_[i] - F_[i - 1], F_[i + 1] - F_[i]);
                const double dsig[3] = {ds.l, ds.c, ds.u};
                double v = 0.0;
                for (int b = 0; b < 3; ++b) {
                    const std::size_t row = (j + b - 1) * nF_ + i;
                    v += dsig[b] * (df.l * u[row - 1] + df.c * u[row] + df.u * u[row + 1]);
                }
                out[j * nF_ + i] += rho_gamma_ * S_[j] * S_[j] * fb_[i] * v;
            }
        }
    }

    // (I - th A1) y = rhs, one tridiagonal system per sigma row; solved transposed.
    void solve_a1(double th, std::vector<double>& rhs) {
        for (std::size_t j = 0; j < nS_; ++j)
            for (std::size_t i = 0; i < nF_; ++i) {
                const std::size_t src = j * nF_ + i, dst = i * nS_ + j;
                tr_[dst] = rhs[src];
                if (i == 0 || i + 1 == nF_) {
                    lo_[dst] = up_[dst] = 0.0;
                    di_[dst] = 1.0;
                } else {
                    const Stencil& s = a1_base_[src];
                    lo_[dst] = -th * s.l;
                    di_[dst] = 1.0 - th * (s.c - 0.5 * r_);
                    up_[dst] = -th * s.u;
                }
            }
        simd::active().tridiag(lo_.data(), di_.data(), up_.data(), tr_.data(), work_.data(), nF_, nS_);
        for (std::size_t j = 0; j < nS_; ++j)
            for (std::size_t i = 0; i < nF_; ++i) rhs[j * nF_ + i] = tr_[i * nS_ + j];
    }

    // (I - th A2) y = rhs, one system per forward node; the layout is already interleaved.
    void solve_a2(double th, std::vector<double>& rhs) {
        for (std::size_t j = 0; j < nS_; ++j) {
            const Stencil& s = a2_[j];
            for (std::size_t i = 0; i < nF_; ++i) {
                const std::size_t k = j * nF_ + i;
                if (i == 0 || i + 1 == nF_) {
                    lo_[k] = up_[k] = 0.0;
                    di_[k] = 1.0;
                } else {
                    lo_[k] = -th * s.l;
                    di_[k] = 1.0 - th * (s.c - 0.5 * r_);
                    up_[k] = -th * s.u;
                }
            }
        }
        simd::active().tridiag(lo_.data(), di_.data(), up_.data(), rhs.data(), work_.data(), nS_, nF_);
    }

    // One Douglas (hv = false) or Hundsdorfer-Verwer step of size h in time-to-maturity.
    void step(std::vector<double>& u, double h, double theta, bool hv) {
        const std::size_t N = u.size();
        apply_a0(u, fu_);
        apply_a1(u, au_);
        apply_a2(u, bu_);
        for (std::size_t k = 0; k < N; ++k) {
            fu_[k] += au_[k] + bu_[k];  // F(u)
            y0_[k] = u[k] + h * fu_[k];
            y1_[k] = y0_[k] - theta * h * au_[k];
        }
        solve_a1(theta * h, y1_);
        for (std::size_t k = 0; k < N; ++k) y2_[k] = y1_[k] - theta * h * bu_[k];
        solve_a2(theta * h, y2_);
        if (!hv) {
            u.swap(y2_);
            return;
        }
        // Corrector around Y2: cu_ = A0 Y2, au_ = A1 Y2, bu_ = A2 Y2.
        apply_a0(y2_, cu_);
        apply_a1(y2_, au_);
        apply_a2(y2_, bu_);
        for (std::size_t k = 0; k < N; ++k) {
            const double fy2 = cu_[k] + au_[k] + bu_[k];
            y0_[k] += 0.5 * h * (fy2 - fu_[k]);
            y1_[k] = y0_[k] - theta * h * au_[k];
        }
        solve_a1(theta * h, y1_);
        for (std::size_t k = 0; k < N; ++k) u[k] = y1_[k] - theta * h * bu_[k];
        solve_a2(theta * h, u);
    }

private:
    const ModelCoefficients& c_;
    const std::vector<double>& F_;
    const std::vector<double>& S_;
    std::size_t nF_, nS_;
    double K_;
    bool covered_;
    double r_ = 0.0, rho_gamma_ = 0.0;
    std::vector<Stencil> a1_base_;  ///< F-diffusion per node, without discount
    std::vector<Stencil> a2_;       ///< sigma operator per row, without discount
    std::vector<double> fb_;        ///< F^{beta+1}
    std::vector<double> au_, bu_, cu_, fu_, y0_, y1_, y2_, lo_, di_, up_, tr_, work_;
};

}  // namespace

PriceResult solve_fd_2d(const ModelCoefficients& coeffs, const MarketState& market,
                        const BarrierContract& contract, const FDGrid& grid, bool covered) {
    const auto t0 = Clock::now();
    check_grid(grid, contract);
    if (grid.sigma_nodes.size() < 10) throw ConfigError("FD grid needs at least 10 sigma nodes");
    if (!(market.sigma >= grid.sigma_nodes.front() && market.sigma <= grid.sigma_nodes.back()))
        throw DomainError("sigma0 outside the sigma grid");
    const std::vector<double>& F = grid.f_nodes;
    const std::vector<double>& S = grid.sigma_nodes;
    const std::size_t nF = F.size(), nS = S.size();
    const double K = contract.strike, H = contract.barrier.level, T = contract.maturity;

    const std::vector<double> terminal = cell_payoff(F, K, H, covered);
    std::vector<double> u(nF * nS);
    for (std::size_t j = 0; j < nS; ++j) std::copy(terminal.begin(), terminal.end(), u.begin() + j * nF);
    AdiSolver adi(coeffs, contract, grid, covered);
    const double bound = 100.0 * (H + K);

    const int steps = step_count(T, grid.dt);
    const double dt = T / steps;
    const int startup = std::min(grid.rannacher_steps, steps);
    for (int s = 0; s < steps; ++s) {
        // Time to maturity runs from s dt to (s+1) dt; calendar time runs backwards.
        const double t_hi = T - s * dt, t_lo = std::max(0.0, T - (s + 1) * dt);
        adi.set_coefficients(t_lo, t_hi);
        if (s < startup) {
            adi.step(u, 0.5 * dt, 1.0, false);
            adi.step(u, 0.5 * dt, 1.0, false);
        } else {
            adi.step(u, dt, 0.5, true);
        }
        check_growth(u, bound, s);
    }

    std::array<double, 4> wf{}, ws{};
    const std::size_t kf = lagrange4(F, market.forward, wf);
    const std::size_t ks = lagrange4(S, market.sigma, ws);
    double v = 0.0;
    for (int b = 0; b < 4; ++b)
        for (int a = 0; a < 4; ++a) v += ws[b] * wf[a] * u[(ks + b) * nF + kf + a];
    PriceResult r;
    r.method = Method::Fd2d;
    r.price = covered ? v + market.forward - K : v;
    r.modes_used = static_cast<int>(nF * nS);
    r.iterations = steps;
    detail::finalize_price(r, market.forward);
    r.elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

}  // namespace lsabr
