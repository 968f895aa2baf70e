#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "lsabr/errors.hpp"

namespace lsabr::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("section '" + where + "' must be an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!keys.count(it.key())) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
}

const json& section(const json& root, const char* name) {
    if (!root.contains(name)) throw ConfigError(std::string("missing section '") + name + "'");
    return root.at(name);
}

// Numbers, or strings of the form "a/b" so maturities like 1/24 stay exact.
double as_number(const json& v, const std::string& what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        auto parse = [&](std::string_view part) {
            double out = 0.0;
            const auto res = std::from_chars(part.data(), part.data() + part.size(), out);
            if (res.ec != std::errc() || res.ptr != part.data() + part.size())
                throw ConfigError("'" + what + "': cannot parse '" + s + "'");
            return out;
        };
        if (slash == std::string::npos) return parse(s);
        const double den = parse(std::string_view(s).substr(slash + 1));
        if (den == 0.0) throw ConfigError("'" + what + "': zero denominator");
        return parse(std::string_view(s).substr(0, slash)) / den;
    }
    throw ConfigError("'" + what + "' must be a number");
}

std::vector<double> as_list(const json& v, const std::string& what) {
    std::vector<double> out;
    if (v.is_array()) {
        for (const json& e : v) out.push_back(as_number(e, what));
        if (out.empty()) throw ConfigError("'" + what + "' must not be empty");
    } else {
        out.push_back(as_number(v, what));
    }
    return out;
}

int as_int(const json& v, const std::string& what) {
    if (!v.is_number_integer()) throw ConfigError("'" + what + "' must be an integer");
    return v.get<int>();
}

bool as_bool(const json& v, const std::string& what) {
    if (!v.is_boolean()) throw ConfigError("'" + what + "' must be true or false");
    return v.get<bool>();
}

ModelCoefficients parse_model(const json& m) {
    reject_unknown(m, "model", {"beta", "gamma1", "gamma2", "kappa1", "kappa2", "r0", "rho", "piecewise"});
    if (!m.contains("beta")) throw ConfigError("model.beta is required");
    const double beta = as_number(m.at("beta"), "model.beta");
    if (m.contains("piecewise")) {
        for (const char* k : {"gamma1", "gamma2", "kappa1", "kappa2", "r0", "rho"})
            if (m.contains(k)) throw ConfigError(std::string("model.") + k + " cannot be combined with piecewise");
        const json& p = m.at("piecewise");
        reject_unknown(p, "model.piecewise", {"t", "gamma", "kappa", "rate", "rho"});
        for (const char* k : {"t", "gamma", "kappa", "rate"})
            if (!p.contains(k)) throw ConfigError(std::string("model.piecewise.") + k + " is required");
        std::vector<double> rho;
        if (p.contains("rho")) rho = as_list(p.at("rho"), "model.piecewise.rho");
        return ModelCoefficients::piecewise(beta, as_list(p.at("t"), "model.piecewise.t"),
                                            as_list(p.at("gamma"), "model.piecewise.gamma"),
                                            as_list(p.at("kappa"), "model.piecewise.kappa"),
                                            as_list(p.at("rate"), "model.piecewise.rate"), rho);
    }
    auto get = [&](const char* k) { return m.contains(k) ? as_number(m.at(k), std::string("model.") + k) : 0.0; };
    return ModelCoefficients::exponential(beta, get("gamma1"), get("gamma2"), get("kappa1"), get("kappa2"), get("r0"),
                                          get("rho"));
}

Barrier parse_barrier(const json& h) {
    if (h.is_number() || h.is_string()) return Barrier::constant(as_number(h, "contract.H"));
    reject_unknown(h, "contract.H", {"kind", "level", "growth"});
    if (!h.contains("level")) throw ConfigError("contract.H.level is required");
    const double level = as_number(h.at("level"), "contract.H.level");
    const double growth = h.contains("growth") ? as_number(h.at("growth"), "contract.H.growth") : 0.0;
    const std::string kind = h.contains("kind") ? h.at("kind").get<std::string>() : "constant";
    if (kind == "constant") return Barrier::constant(level);
    if (kind == "exponential") return Barrier::exponential(level, growth);
    if (kind == "linear") return Barrier::linear(level, growth);
    throw ConfigError("contract.H.kind must be constant, exponential or linear");
}

void parse_numerics(const json& n, RunConfig& cfg) {
    reject_unknown(n, "numerics",
                   {"n_tau", "n_z", "z_halfwidth", "epsilon", "epsilon_tau_scaled", "quadrature_nodes", "modes",
                    "solver", "solver_tol", "krylov_max_iter", "max_iterations", "iteration_tol", "rescale",
                    "atm_extra_node", "atm_extra_offset", "threads", "summation", "analytic_terms", "fd_nf",
                    "fd_nsigma", "fd_dt", "fd_rannacher", "fd_covered", "fd_f_stretch", "fd_barrier_weight",
                    "fd_sigma_stretch"});
    LmvfNumerics& l = cfg.git.lmvf;
    auto has = [&](const char* k) { return n.contains(k); };
    auto num = [&](const char* k) { return as_number(n.at(k), std::string("numerics.") + k); };
    auto integer = [&](const char* k) { return as_int(n.at(k), std::string("numerics.") + k); };
    auto flag = [&](const char* k) { return as_bool(n.at(k), std::string("numerics.") + k); };
    if (has("n_tau")) l.n_tau = integer("n_tau");
    if (has("n_z")) l.n_z = integer("n_z");
    if (has("z_halfwidth")) l.z_halfwidth = num("z_halfwidth");
    if (has("epsilon")) {
        const json& e = n.at("epsilon");
        if (e.is_string() && e.get<std::string>() == "auto") {
            cfg.git.epsilon_auto = true;
        } else {
            cfg.git.epsilon_auto = false;
            l.epsilon = num("epsilon");
            if (!(l.epsilon > 0.0)) throw ConfigError("numerics.epsilon must be positive");
        }
    }
    if (has("epsilon_tau_scaled")) l.epsilon_tau_scaled = num("epsilon_tau_scaled");
    if (has("quadrature_nodes")) l.quadrature_nodes = integer("quadrature_nodes");
    if (has("modes")) l.modes = integer("modes");
    if (has("solver")) l.solver = parse_solver(n.at("solver").get<std::string>());
    if (has("solver_tol")) l.solver_tol = num("solver_tol");
    if (has("krylov_max_iter")) l.krylov_max_iter = integer("krylov_max_iter");
    if (has("max_iterations")) l.max_iterations = integer("max_iterations");
    if (has("iteration_tol")) l.iteration_tol = num("iteration_tol");
    if (has("rescale")) l.rescale = flag("rescale");
    if (has("atm_extra_node")) l.atm_extra_node = flag("atm_extra_node");
    if (has("atm_extra_offset")) l.atm_extra_offset = num("atm_extra_offset");
    if (has("threads")) l.threads = integer("threads");
    if (has("summation")) {
        const std::string s = n.at("summation").get<std::string>();
        if (s == "plain") cfg.git.summation = Summation::Plain;
        else if (s == "cesaro") cfg.git.summation = Summation::Cesaro;
        else throw ConfigError("numerics.summation must be plain or cesaro");
    }
    if (has("analytic_terms")) cfg.analytic_terms = integer("analytic_terms");
    if (has("fd_nf")) cfg.fd.n_f = integer("fd_nf");
    if (has("fd_nsigma")) cfg.fd.n_sigma = integer("fd_nsigma");
    if (has("fd_dt")) cfg.fd.grid.dt = num("fd_dt");
    if (has("fd_rannacher")) cfg.fd.grid.rannacher_steps = integer("fd_rannacher");
    if (has("fd_covered")) cfg.fd.covered = flag("fd_covered");
    if (has("fd_f_stretch")) cfg.fd.grid.f_stretch = num("fd_f_stretch");
    if (has("fd_barrier_weight")) cfg.fd.grid.barrier_weight = num("fd_barrier_weight");
    if (has("fd_sigma_stretch")) cfg.fd.grid.sigma_stretch = num("fd_sigma_stretch");
    if (l.modes < 1 || l.n_tau < 1 || l.n_z < 1 || l.quadrature_nodes < 3 || l.threads < 1)
        throw ConfigError("numerics counts must be positive (quadrature_nodes >= 3)");
    if (cfg.analytic_terms < 1) throw ConfigError("numerics.analytic_terms must be positive");
    if (cfg.fd.n_f < 10 || cfg.fd.n_sigma < 10) throw ConfigError("fd_nf and fd_nsigma must be at least 10");
    if (cfg.fd.grid.dt < 0.0) throw ConfigError("numerics.fd_dt must be nonnegative");
    if (cfg.fd.grid.rannacher_steps < 0) throw ConfigError("numerics.fd_rannacher must be nonnegative");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        reject_unknown(root, "<root>", {"model", "market", "contract", "numerics", "output", "methods", "converge", "bench"});
        RunConfig cfg;
        cfg.coeffs = parse_model(section(root, "model"));

        const json& mk = section(root, "market");
        reject_unknown(mk, "market", {"F", "sigma"});
        if (!mk.contains("F") || !mk.contains("sigma")) throw ConfigError("market needs F and sigma");
        cfg.market = {as_number(mk.at("F"), "market.F"), as_number(mk.at("sigma"), "market.sigma")};
        if (!(cfg.market.forward > 0.0) || !(cfg.market.sigma > 0.0))
            throw ConfigError("market.F and market.sigma must be positive");

        const json& ct = section(root, "contract");
        reject_unknown(ct, "contract", {"K", "H", "T"});
        for (const char* k : {"K", "H", "T"})
            if (!ct.contains(k)) throw ConfigError(std::string("contract.") + k + " is required");
        cfg.strikes = as_list(ct.at("K"), "contract.K");
        cfg.maturities = as_list(ct.at("T"), "contract.T");
        cfg.barrier = parse_barrier(ct.at("H"));
        for (double T : cfg.maturities)
            if (!(T > 0.0)) throw ConfigError("contract.T values must be positive");

        if (root.contains("numerics")) parse_numerics(root.at("numerics"), cfg);

        if (root.contains("output")) {
            const json& o = root.at("output");
            reject_unknown(o, "output", {"format", "path"});
            if (o.contains("format")) cfg.output.format = o.at("format").get<std::string>();
            if (o.contains("path")) cfg.output.path = o.at("path").get<std::string>();
            if (cfg.output.format != "csv" && cfg.output.format != "json")
                throw ConfigError("output.format must be csv or json");
        }

        if (root.contains("methods")) {
            const json& ms = root.at("methods");
            if (!ms.is_array() || ms.empty()) throw ConfigError("methods must be a non-empty list");
            for (const json& m : ms) cfg.methods.push_back(parse_method(m.get<std::string>()));
        } else {
            cfg.methods.push_back(Method::Git);
        }

        if (root.contains("converge")) {
            const json& c = root.at("converge");
            reject_unknown(c, "converge", {"betas", "ratio_max", "partial_sum_max", "eta", "payoff_max", "payoff_forward"});
            if (c.contains("betas")) cfg.converge.betas = as_list(c.at("betas"), "converge.betas");
            if (c.contains("ratio_max")) cfg.converge.ratio_max = as_int(c.at("ratio_max"), "converge.ratio_max");
            if (c.contains("partial_sum_max"))
                cfg.converge.partial_sum_max = as_int(c.at("partial_sum_max"), "converge.partial_sum_max");
            if (c.contains("eta")) cfg.converge.eta = as_number(c.at("eta"), "converge.eta");
            if (c.contains("payoff_max")) cfg.converge.payoff_max = as_int(c.at("payoff_max"), "converge.payoff_max");
            if (c.contains("payoff_forward"))
                cfg.converge.payoff_forward = as_number(c.at("payoff_forward"), "converge.payoff_forward");
            if (cfg.converge.ratio_max < 1 || cfg.converge.partial_sum_max < 1 || cfg.converge.payoff_max < 1)
                throw ConfigError("converge maxima must be positive");
            if (!(cfg.converge.eta > 0.0 && cfg.converge.eta < 1.0)) throw ConfigError("converge.eta must lie in (0, 1)");
        }

        if (root.contains("bench")) {
            const json& b = root.at("bench");
            reject_unknown(b, "bench", {"repeats"});
            if (b.contains("repeats")) cfg.bench.repeats = as_int(b.at("repeats"), "bench.repeats");
            if (cfg.bench.repeats < 1) throw ConfigError("bench.repeats must be positive");
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    } catch (const UnsupportedError& e) {
        throw ConfigError(e.what());
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

bool constant_rate(const ModelCoefficients& c) {
    if (c.representation() == CoeffRepresentation::ParametricExponential) return true;
    const auto& r = c.rate_values();
    for (double v : r)
        if (v != r.front()) return false;
    return true;
}

}  // namespace

void check_capabilities(const RunConfig& cfg) {
    const ModelCoefficients& c = *cfg.coeffs;
    for (Method m : cfg.methods) {
        const std::string name = method_name(m);
        switch (m) {
            case Method::AnalyticConstSigma:
            case Method::ThetaRepresentation:
            case Method::Fd1d:
                if (!c.frozen_volatility())
                    throw ConfigError("method " + name + " needs constant sigma (gamma = kappa = 0)");
                if (!constant_rate(c)) throw ConfigError("method " + name + " needs a constant rate");
                if (!cfg.barrier.is_constant()) throw ConfigError("method " + name + " needs a constant barrier");
                break;
            case Method::Fd2d:
                if (!cfg.barrier.is_constant()) throw ConfigError("method fd-2d needs a constant barrier");
                break;
            case Method::Git:
                if (!c.positive_gamma()) throw ConfigError("method git needs gamma(t) > 0");
                break;
        }
        if (!c.zero_correlation() && m != Method::Fd2d) throw ConfigError("method " + name + " needs rho = 0");
    }
}

PriceResult price_cell(const RunConfig& cfg, Method method, double K, double T) {
    const ModelCoefficients& c = *cfg.coeffs;
    const BarrierContract contract = cfg.contract(K, T);
    switch (method) {
        case Method::Git:
            return price_git(c, cfg.market, contract, cfg.git);
        case Method::AnalyticConstSigma:
            return price_analytic_const_sigma(cfg.market, contract, c.rate(0.0), c.beta(), cfg.analytic_terms);
        case Method::ThetaRepresentation:
            return price_theta_representation(cfg.market, contract, c.rate(0.0), c.beta(), cfg.analytic_terms);
        case Method::Fd1d: {
            const FDGrid g = build_grid(cfg.market, contract, cfg.fd.n_f, cfg.fd.n_sigma, cfg.fd.grid);
            return solve_fd_1d(cfg.market, contract, c.rate(0.0), c.beta(), g, cfg.fd.covered);
        }
        case Method::Fd2d: {
            const FDGrid g = build_grid(cfg.market, contract, cfg.fd.n_f, cfg.fd.n_sigma, cfg.fd.grid);
            return solve_fd_2d(c, cfg.market, contract, g, cfg.fd.covered);
        }
    }
    throw InternalError("unhandled method");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace lsabr::cli
