#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "lsabr/bessel.hpp"
#include "lsabr/errors.hpp"
#include "lsabr/simd.hpp"
#include "lsabr/transform.hpp"

namespace lsabr::cli {

namespace {

struct Cell {
    Method method;
    double K;
    double T;
};

struct CellOutcome {
    std::optional<PriceResult> result;
    std::string error;
    bool config_error = false;
};

// Runs every cell; results land at their own index so row order never depends on scheduling.
std::vector<CellOutcome> sweep(const RunConfig& cfg, const std::vector<Cell>& cells, int jobs) {
    std::vector<CellOutcome> out(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                out[i].result = price_cell(cfg, cells[i].method, cells[i].K, cells[i].T);
            } catch (const ConfigError& e) {
                out[i].error = e.what();
                out[i].config_error = true;
            } catch (const UnsupportedError& e) {
                out[i].error = e.what();
                out[i].config_error = true;
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return out;
}

class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ConfigError("cannot open output '" + path + "'");
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string out_path(const RunConfig& cfg, const CommandOptions& opt) {
    return opt.out.empty() ? cfg.output.path : opt.out;
}

std::string n2s(double v) { return format_number(v); }

std::vector<Cell> grid_cells(const RunConfig& cfg, const std::vector<Method>& methods) {
    std::vector<Cell> cells;
    for (Method m : methods)
        for (double K : cfg.strikes)
            for (double T : cfg.maturities) cells.push_back({m, K, T});
    return cells;
}

void write_price_rows(std::ostream& os, const RunConfig& cfg, const std::vector<Cell>& cells,
                      const std::vector<CellOutcome>& res) {
    if (cfg.output.format == "json") {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            nlohmann::json j = nlohmann::json::parse(to_json(*res[i].result));
            j["K"] = cells[i].K;
            j["T"] = cells[i].T;
            os << j.dump() << '\n';
        }
        return;
    }
    os << "method,K,T,price,elapsed_s,modes,iterations,residual\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const PriceResult& r = *res[i].result;
        os << method_name(cells[i].method) << ',' << n2s(cells[i].K) << ',' << n2s(cells[i].T) << ','
           << n2s(r.price) << ',' << n2s(r.elapsed) << ',' << r.modes_used << ',' << r.iterations << ','
           << n2s(r.solver_residual) << '\n';
    }
}

std::string machine_info() {
    std::string cpu = "unknown";
    std::ifstream in("/proc/cpuinfo");
    for (std::string line; std::getline(in, line);)
        if (line.rfind("model name", 0) == 0) {
            cpu = line.substr(line.find(':') + 2);
            break;
        }
    std::ostringstream ss;
    ss << "# cpu: " << cpu << '\n'
       << "# hardware_threads: " << std::thread::hardware_concurrency() << '\n'
       << "# kernels: " << simd::isa_name(simd::active().isa) << '\n';
    return ss.str();
}

}  // namespace

int cmd_price(const RunConfig& cfg_in, const CommandOptions& opt, bool fd_only) {
    RunConfig cfg = cfg_in;
    if (fd_only) {
        std::vector<Method> fd;
        for (Method m : cfg.methods)
            if (m == Method::Fd1d || m == Method::Fd2d) fd.push_back(m);
        if (fd.empty()) fd.push_back(Method::Fd2d);
        cfg.methods = fd;
    }
    check_capabilities(cfg);
    const auto cells = grid_cells(cfg, cfg.methods);
    const auto res = sweep(cfg, cells, opt.jobs);
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (!res[i].result) {
            std::cerr << "error: " << method_name(cells[i].method) << " K=" << n2s(cells[i].K)
                      << " T=" << n2s(cells[i].T) << ": " << res[i].error << '\n';
            return res[i].config_error ? kConfigError : kNumericalFailure;
        }
    Sink sink(out_path(cfg, opt));
    write_price_rows(sink.os(), cfg, cells, res);
    return kOk;
}

int cmd_compare(const RunConfig& cfg, const CommandOptions& opt) {
    if (cfg.methods.size() < 2) throw ConfigError("compare needs at least two methods");
    check_capabilities(cfg);
    const std::vector<Method> pair{cfg.methods[0], cfg.methods[1]};
    const auto cells = grid_cells(cfg, pair);
    const auto res = sweep(cfg, cells, opt.jobs);
    const std::size_t half = cells.size() / 2;
    int warnings = 0;
    Sink sink(out_path(cfg, opt));
    std::ostream& os = sink.os();
    os << "# 100*(" << method_name(pair[0]) << " - " << method_name(pair[1]) << ")/" << method_name(pair[0]) << '\n';
    os << "K";
    for (double T : cfg.maturities) os << ",T=" << n2s(T);
    os << '\n';
    std::size_t i = 0;
    for (double K : cfg.strikes) {
        os << n2s(K);
        for (std::size_t t = 0; t < cfg.maturities.size(); ++t, ++i) {
            const CellOutcome& a = res[i];
            const CellOutcome& b = res[i + half];
            if (!a.result || !b.result || a.result->price == 0.0) {
                ++warnings;
                const std::string why = !a.result ? a.error : !b.result ? b.error : "reference price is zero";
                std::cerr << "warning: K=" << n2s(K) << " T=" << n2s(cfg.maturities[t]) << ": " << why << '\n';
                os << ",NA";
                continue;
            }
            os << ',' << n2s(100.0 * (a.result->price - b.result->price) / a.result->price);
        }
        os << '\n';
    }
    if (warnings > 0) std::cerr << "compare: " << warnings << " cell(s) marked NA\n";
    return kOk;
}

int cmd_converge(const RunConfig& cfg, const CommandOptions& opt) {
    const ConvergeSpec& c = cfg.converge;
    const std::filesystem::path dir = out_path(cfg, opt).empty() ? "." : out_path(cfg, opt);
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + (dir / name).string());
        return f;
    };
    std::ofstream ratio = open("ratio.csv"), partial = open("partial_sum.csv"), payoff = open("payoff_error.csv");
    ratio << "beta,n,R_n\n";
    partial << "beta,M,Z\n";
    payoff << "beta,N,plain_value,cesaro_value,plain_rel_error,cesaro_rel_error\n";

    const double K = cfg.strikes.front();
    const double F = c.payoff_forward;
    const double exact = std::max(F - K, 0.0);
    for (double beta : c.betas) {
        if (!(beta > -1.0 && beta < 0.0)) throw ConfigError("converge.betas must lie in (-1, 0)");
        const double order = -1.0 / (2.0 * beta);
        const int count = std::max({c.ratio_max, c.partial_sum_max, c.payoff_max});
        const BasisPtr basis = cached_basis(order, count);
        for (int n = 0; n < c.ratio_max; ++n)
            ratio << n2s(beta) << ',' << n + 1 << ',' << n2s(basis->ratios[n]) << '\n';
        double z = 0.0;
        for (int m = 0; m < c.partial_sum_max; ++m) {
            z += bessel_j(order, basis->zeros[m] * c.eta) / (basis->j_plus_one[m] * basis->zeros[m]);
            partial << n2s(beta) << ',' << m + 1 << ',' << n2s(z) << '\n';
        }

        const ModelCoefficients coeffs = ModelCoefficients::exponential(beta, 0.0, 0.0, 0.0, 0.0, 0.0);
        const BarrierContract contract = cfg.contract(K, cfg.maturities.front());
        const TransformContext ctx = make_context(coeffs, contract, c.payoff_max);
        const double y = ctx.y_terminal(), x = x_of_forward(beta, F);
        std::vector<double> images(c.payoff_max);
        for (int n = 0; n < c.payoff_max; ++n) images[n] = terminal_image(ctx, ctx.basis().zeros[n] / y);
        const double T = contract.maturity;
        for (int N = 1; N <= c.payoff_max; ++N) {
            const std::span<const double> head(images.data(), N);
            const double plain = inverse_series(ctx, head, x, T, Summation::Plain);
            const double ces = inverse_series(ctx, head, x, T, Summation::Cesaro);
            payoff << n2s(beta) << ',' << N << ',' << n2s(plain) << ',' << n2s(ces) << ','
                   << n2s(std::abs(plain - exact) / exact) << ',' << n2s(std::abs(ces - exact) / exact) << '\n';
        }
    }
    return kOk;
}

int cmd_bench(const RunConfig& cfg, const CommandOptions& opt) {
    check_capabilities(cfg);
    Sink sink(out_path(cfg, opt));
    std::ostream& os = sink.os();
    os << machine_info() << "# repeats: " << cfg.bench.repeats << " (warm-up run excluded)\n";
    os << "method,K,T,price,min_s,median_s,max_s\n";
    for (const Cell& cell : grid_cells(cfg, cfg.methods)) {
        price_cell(cfg, cell.method, cell.K, cell.T);
        std::vector<double> times;
        double price = 0.0;
        for (int r = 0; r < cfg.bench.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            price = price_cell(cfg, cell.method, cell.K, cell.T).price;
            times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        std::sort(times.begin(), times.end());
        os << method_name(cell.method) << ',' << n2s(cell.K) << ',' << n2s(cell.T) << ',' << n2s(price) << ','
           << n2s(times.front()) << ',' << n2s(times[times.size() / 2]) << ',' << n2s(times.back()) << '\n';
    }
    return kOk;
}

int cmd_zeros(const RunConfig& cfg, const CommandOptions& opt) {
    const double order = -1.0 / (2.0 * cfg.coeffs->beta());
    const int count = cfg.git.lmvf.modes;
    const BasisPtr basis = cached_basis(order, count);
    Sink sink(out_path(cfg, opt));
    std::ostream& os = sink.os();
    os << "n,mu_n,J_plus_one,R_n\n";
    for (int n = 0; n < count; ++n)
        os << n + 1 << ',' << n2s(basis->zeros[n]) << ',' << n2s(basis->j_plus_one[n]) << ','
           << n2s(basis->ratios[n]) << '\n';
    return kOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Up-and-out barrier call pricer for the lambda-SABR model"};
    app.require_subcommand(1);
    CommandOptions opt;
    std::string which;
    const std::pair<const char*, const char*> subcommands[] = {
        {"price", "price every (K, T) cell with each configured method"},
        {"price-fd", "price with the finite-difference methods only (default fd-2d)"},
        {"compare", "percentage difference of the first two methods on the (K, T) grid"},
        {"converge", "ratio, partial-sum and payoff-reconstruction convergence tables"},
        {"bench", "timing of each method per cell, warm-up excluded"},
        {"zeros", "Bessel zeros, J_{+1} values and ratios for the model order"}};
    for (const auto& [name, help] : subcommands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config_path, "JSON run file")->required();
        sub->add_option("--out", opt.out, "output path (a directory for converge)");
        sub->add_option("--jobs", opt.jobs, "concurrent (K,T) cells")->check(CLI::PositiveNumber);
        sub->callback([&which, name] { which = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }
    try {
        const RunConfig cfg = load_config(opt.config_path);
        if (which == "price") return cmd_price(cfg, opt, false);
        if (which == "price-fd") return cmd_price(cfg, opt, true);
        if (which == "compare") return cmd_compare(cfg, opt);
        if (which == "converge") return cmd_converge(cfg, opt);
        if (which == "bench") return cmd_bench(cfg, opt);
        return cmd_zeros(cfg, opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const UnsupportedError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

}  // namespace lsabr::cli
