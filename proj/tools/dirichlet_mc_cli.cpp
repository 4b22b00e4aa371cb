// Experiment driver: loads a JSON config describing a model preset and an
// estimator, runs one of the subcommands and writes machine-readable CSV.
// Identical configs produce byte-identical outputs.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dirichlet_mc/dirichlet_mc.hpp"

namespace {

using nlohmann::json;
using namespace dmc;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

const json& require_field(const json& j, const std::string& key, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing field: " + path + "." + key);
    return *it;
}

double number_field(const json& j, const std::string& key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number()) throw ConfigError("field must be a number: " + path + "." + key);
    return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw ConfigError("field must be a number: " + key);
    return it->get<double>();
}

struct ModelSpec {
    std::string kind;
    std::string preset;
    std::shared_ptr<StructureProvider> provider;
};

ModelSpec build_model(const json& root) {
    const json& model = require_field(root, "model", "config");
    const std::string kind =
        require_field(model, "kind", "model").get<std::string>();
    std::string preset = model.value("preset", std::string{});
    const json params = model.value("params", json::object());
    ModelSpec spec;
    spec.kind = kind;
    if (kind == "wiener") {
        if (preset.empty()) preset = "gauss_const_sigma";
        if (preset == "gauss_const_sigma") {
            presets::GaussParams p;
            p.sigma = number_or(params, "sigma", p.sigma);
            p.x0 = number_or(params, "x0", p.x0);
            p.T = number_or(params, "T", p.T);
            p.n = static_cast<std::size_t>(number_or(params, "n", static_cast<double>(p.n)));
            p.v0 = number_or(params, "v0", p.v0);
            const std::string src = params.value("error_source", std::string("brownian"));
            if (src == "brownian")
                p.source = wiener::ErrorSource::brownian;
            else if (src == "initial")
                p.source = wiener::ErrorSource::initial;
            else if (src == "both")
                p.source = wiener::ErrorSource::both;
            else
                throw ConfigError("unknown value for model.params.error_source: " + src);
            spec.provider = presets::gauss_const_sigma(p);
        } else if (preset == "gbm") {
            presets::GbmParams p;
            p.sigma = number_or(params, "sigma", p.sigma);
            p.rate = number_or(params, "rate", p.rate);
            p.x0 = number_or(params, "x0", p.x0);
            p.T = number_or(params, "T", p.T);
            p.n = static_cast<std::size_t>(number_or(params, "n", static_cast<double>(p.n)));
            spec.provider = presets::gbm(p);
        } else {
            throw ConfigError("unknown wiener preset: model.preset = " + preset);
        }
    } else if (kind == "poisson") {
        if (preset.empty()) preset = "poisson_interval";
        if (preset != "poisson_interval")
            throw ConfigError("unknown poisson preset: model.preset = " + preset);
        presets::PoissonIntervalParams p;
        p.mass = number_or(params, "mass", p.mass);
        spec.provider = presets::poisson_interval(p);
    } else if (kind == "mcspace") {
        if (preset.empty()) preset = "mc_identity";
        if (preset != "mc_identity")
            throw ConfigError("unknown mcspace preset: model.preset = " + preset);
        spec.provider = presets::mc_identity();
    } else {
        throw ConfigError("unknown model kind: model.kind = " + kind);
    }
    spec.preset = preset;
    return spec;
}

struct EstimatorSpec {
    std::string method = "random_kernel";
    std::size_t n = 0;
    estimators::EpsilonCriterion rule = estimators::EpsilonCriterion::L2;
    double epsilon = 0.0;
    std::vector<double> grid;
    double ridge = 1e-8;
    std::string payload = "none";
    std::string control = "optimal";
};

EstimatorSpec build_estimator(const json& root) {
    const json& est = require_field(root, "estimator", "config");
    EstimatorSpec spec;
    spec.method = est.value("method", std::string("random_kernel"));
    if (spec.method != "random_kernel" && spec.method != "classical" &&
        spec.method != "direct")
        throw ConfigError("unknown value for estimator.method: " + spec.method);
    const double n = number_field(est, "N", "estimator");
    if (!(n >= 2)) throw ConfigError("estimator.N must be >= 2");
    spec.n = static_cast<std::size_t>(n);
    if (est.contains("epsilon")) {
        const json& eps = est["epsilon"];
        const std::string rule = eps.value("rule", std::string("manual"));
        if (rule == "L2")
            spec.rule = estimators::EpsilonCriterion::L2;
        else if (rule == "poly")
            spec.rule = estimators::EpsilonCriterion::poly;
        else if (rule == "manual")
            spec.rule = estimators::EpsilonCriterion::manual;
        else
            throw ConfigError("unknown value for estimator.epsilon.rule: " + rule);
        spec.epsilon = number_or(eps, "value", 0.0);
        if (spec.rule == estimators::EpsilonCriterion::manual && spec.epsilon < 0.0)
            throw ConfigError("estimator.epsilon.value must be >= 0");
        if (spec.rule == estimators::EpsilonCriterion::manual &&
            spec.method == "random_kernel" && !(spec.epsilon > 0.0))
            throw ConfigError("estimator.epsilon.value must be > 0 for random_kernel");
    } else if (spec.method == "direct") {
        spec.rule = estimators::EpsilonCriterion::manual;
        spec.epsilon = 0.0;
    }
    const json& grid = require_field(est, "grid", "estimator");
    const double lo = number_field(grid, "min", "estimator.grid");
    const double hi = number_field(grid, "max", "estimator.grid");
    const double count = number_field(grid, "count", "estimator.grid");
    if (!(count >= 1)) throw ConfigError("estimator.grid.count must be >= 1");
    spec.grid = estimators::linear_grid(lo, hi, static_cast<std::size_t>(count));
    spec.ridge = number_or(est, "ridge", spec.ridge);
    spec.payload = est.value("payload", std::string("none"));
    if (spec.payload != "none" && spec.payload != "one" && spec.payload != "cos")
        throw ConfigError("unknown value for estimator.payload: " + spec.payload);
    spec.control = est.value("control", std::string("optimal"));
    if (spec.control != "optimal" && spec.control != "mean_sign" && spec.control != "none")
        throw ConfigError("unknown value for estimator.control: " + spec.control);
    return spec;
}

struct Invocation {
    json config;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::filesystem::path out_dir;
};

std::ofstream open_out(const Invocation& inv, const std::string& name) {
    std::filesystem::create_directories(inv.out_dir);
    std::ofstream out(inv.out_dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + name);
    return out;
}

int cmd_simulate(const Invocation& inv) {
    const ModelSpec model = build_model(inv.config);
    const double m = number_or(inv.config, "samples", 100.0);
    if (!(m >= 1)) throw ConfigError("samples must be >= 1");
    const auto samples = sample_batch_extended(*model.provider,
                                               static_cast<std::size_t>(m), inv.seed,
                                               /*job=*/1, inv.workers);
    std::ofstream out = open_out(inv, "samples.csv");
    out << "n,x,gamma,a,gamma_gamma,degenerate,N,seed\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ExtendedSample& s = samples[i];
        out << i << ',' << fmt(s.x) << ',' << fmt(s.gamma) << ',' << fmt(s.a) << ','
            << fmt(s.gamma_gamma) << ',' << (s.degenerate ? 1 : 0) << ','
            << samples.size() << ',' << inv.seed << '\n';
    }
    return 0;
}

int cmd_density(const Invocation& inv) {
    const ModelSpec model = build_model(inv.config);
    const EstimatorSpec est = build_estimator(inv.config);
    std::ofstream out = open_out(inv, "density.csv");
    out << "x,value,stderr,method,epsilon,N,seed\n";
    auto write_rows = [&](const std::string& method, double param,
                          const std::vector<double>& xs, const std::vector<double>& vals,
                          const std::vector<double>& ses) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            out << fmt(xs[i]) << ',' << fmt(vals[i]) << ',' << fmt(ses[i]) << ','
                << method << ',' << fmt(param) << ',' << est.n << ',' << inv.seed
                << '\n';
    };
    if (est.method == "random_kernel") {
        const auto samples =
            sample_batch(*model.provider, est.n, inv.seed, /*job=*/2, inv.workers);
        estimators::EstimatorConfig cfg;
        cfg.rule = est.rule;
        cfg.epsilon = est.epsilon;
        cfg.grid = est.grid;
        cfg.ridge = est.ridge;
        const auto de = estimators::random_kernel_density(samples, cfg);
        write_rows(de.method, de.parameter, de.grid, de.value, de.se);
    } else if (est.method == "classical") {
        const auto samples =
            sample_batch(*model.provider, est.n, inv.seed, /*job=*/2, inv.workers);
        std::vector<double> xs(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) xs[i] = samples[i].x;
        const double h = est.rule == estimators::EpsilonCriterion::manual
                             ? est.epsilon
                             : estimators::classical_bandwidth(est.n, 1, est.rule);
        if (!(h > 0.0)) throw ConfigError("estimator.epsilon.value must be > 0 for classical");
        const auto de = estimators::classical_kde(xs, h, est.grid);
        write_rows(de.method, de.parameter, de.grid, de.value, de.se);
    } else {
        const double eps = est.rule == estimators::EpsilonCriterion::manual
                               ? est.epsilon
                               : estimators::epsilon_rule(est.n, 1, est.rule);
        std::function<double(double)> phi, phi_x;
        if (est.payload == "one") {
            phi = [](double) { return 1.0; };
            phi_x = [](double) { return 0.0; };
        } else if (est.payload == "cos") {
            phi = [](double x) { return std::cos(x); };
            phi_x = [](double x) { return -std::sin(x); };
        }
        const auto samples = sample_batch_extended(*model.provider, est.n, inv.seed,
                                                   /*job=*/2, inv.workers, phi, phi_x);
        std::vector<double> vals(est.grid.size()), ses(est.grid.size());
        if (est.payload == "none") {
            for (std::size_t i = 0; i < est.grid.size(); ++i) {
                const auto pe = estimators::direct_density(samples, est.grid[i], eps);
                vals[i] = pe.value;
                ses[i] = pe.se;
            }
            write_rows("direct", eps, est.grid, vals, ses);
        } else {
            estimators::ControlSpec control = estimators::ControlSpec::optimal();
            if (est.control == "mean_sign")
                control = estimators::ControlSpec::mean_sign();
            else if (est.control == "none")
                control = estimators::ControlSpec::none();
            for (std::size_t i = 0; i < est.grid.size(); ++i) {
                const auto ce =
                    estimators::direct_conditional(samples, est.grid[i], eps, control);
                vals[i] = ce.value;
                ses[i] = ce.se;
            }
            write_rows("direct_conditional", eps, est.grid, vals, ses);
        }
    }
    return 0;
}

int cmd_mean(const Invocation& inv) {
    const ModelSpec model = build_model(inv.config);
    const EstimatorSpec est = build_estimator(inv.config);
    std::vector<double> eps_sweep = {0.0, 0.5, 1.0, 2.0};
    if (inv.config.contains("mean")) {
        const json& m = inv.config["mean"];
        if (m.contains("epsilons")) {
            eps_sweep.clear();
            for (const json& v : m["epsilons"]) {
                if (!v.is_number()) throw ConfigError("mean.epsilons must be numbers");
                eps_sweep.push_back(v.get<double>());
            }
            if (eps_sweep.empty()) throw ConfigError("mean.epsilons must be nonempty");
        }
    }
    const auto samples =
        sample_batch(*model.provider, est.n, inv.seed, /*job=*/3, inv.workers);
    std::ofstream out = open_out(inv, "mean.csv");
    out << "epsilon,mean,mean_stderr,trace_cov,trace_cov_stderr,method,N,seed\n";
    for (double eps : eps_sweep) {
        const auto sm = estimators::shifted_mean(std::span(samples), eps);
        out << fmt(eps) << ',' << fmt(sm.mean) << ',' << fmt(sm.se_mean) << ','
            << fmt(sm.variance) << ',' << fmt(sm.se_variance) << ",shifted_mean,"
            << est.n << ',' << inv.seed << '\n';
    }
    try {
        const auto opt = estimators::estimate_optimal_epsilon(std::span(samples));
        std::cout << "optimal epsilon " << fmt(opt.epsilon) << " predicted trace "
                  << fmt(opt.predicted_trace) << "\n";
    } catch (const std::domain_error& e) {
        std::cout << "optimal epsilon unavailable: " << e.what() << "\n";
    }
    return 0;
}

int cmd_rates(const Invocation& inv) {
    const ModelSpec model = build_model(inv.config);
    const json& rates = require_field(inv.config, "rates", "config");
    std::vector<analysis::RateMethod> methods;
    for (const json& m : require_field(rates, "methods", "rates")) {
        const std::string name = m.get<std::string>();
        if (name == "random_kernel")
            methods.push_back(analysis::RateMethod::random_kernel);
        else if (name == "classical")
            methods.push_back(analysis::RateMethod::classical);
        else if (name == "direct")
            methods.push_back(analysis::RateMethod::direct);
        else
            throw ConfigError("unknown value in rates.methods: " + name);
    }
    const std::string crit = rates.value("criterion", std::string("L2"));
    estimators::EpsilonCriterion criterion;
    if (crit == "L2")
        criterion = estimators::EpsilonCriterion::L2;
    else if (crit == "poly")
        criterion = estimators::EpsilonCriterion::poly;
    else
        throw ConfigError("unknown value for rates.criterion: " + crit);
    std::vector<std::size_t> n_grid;
    for (const json& v : require_field(rates, "N_grid", "rates")) {
        if (!v.is_number()) throw ConfigError("rates.N_grid must be numbers");
        n_grid.push_back(static_cast<std::size_t>(v.get<double>()));
    }
    analysis::RateOptions opt;
    opt.replications =
        static_cast<std::size_t>(number_or(rates, "replications", 8.0));
    opt.point = number_or(rates, "point", 0.25);
    opt.workers = inv.workers;
    const auto reports = analysis::rate_experiment(*model.provider, methods, n_grid,
                                                   criterion, opt, inv.seed);
    for (const auto& rep : reports) {
        std::ofstream out =
            open_out(inv, "rates_" + rep.method + "_" + rep.criterion + ".csv");
        out << "N,error,stderr,slope_lo,slope_hi\n";
        for (const auto& p : rep.points)
            out << p.n << ',' << fmt(p.error) << ',' << fmt(p.se) << ','
                << fmt(rep.slope.lo) << ',' << fmt(rep.slope.hi) << '\n';
        std::cout << rep.method << " " << rep.criterion << " slope "
                  << fmt(rep.slope.slope) << " [" << fmt(rep.slope.lo) << ", "
                  << fmt(rep.slope.hi) << "]\n";
    }
    return 0;
}

int cmd_check(const Invocation& inv) {
    const ModelSpec model = build_model(inv.config);
    const StructureProvider& provider = *model.provider;
    const std::size_t n = 100000;
    bool all_pass = true;
    std::ofstream out = open_out(inv, "check.csv");
    out << "check,value,stderr,pass,N,seed\n";
    auto report = [&](const std::string& name, double value, double se, bool pass) {
        all_pass = all_pass && pass;
        std::printf("%-34s %s  (value %.6g, stderr %.3g)\n", name.c_str(),
                    pass ? "PASS" : "FAIL", value, se);
        out << name << ',' << fmt(value) << ',' << fmt(se) << ',' << (pass ? 1 : 0)
            << ',' << n << ',' << inv.seed << '\n';
    };

    // square-field invariants per sample
    {
        std::size_t failures = 0;
        double worst_eig = 0.0;
        for (std::size_t i = 0; i < 10000; ++i) {
            RngStream rng = derive_substream(inv.seed, 10, static_cast<std::uint32_t>(i));
            const auto v = validate_triplet(provider.sample_triplet(rng), 1e-9);
            if (!v.pass) ++failures;
            worst_eig = std::min(worst_eig, v.min_eigenvalue);
        }
        report("psd_validation", worst_eig, 0.0, failures == 0);
    }
    // E[A[X]] = 0
    {
        const auto samples = sample_batch(provider, n, inv.seed, 11, inv.workers);
        std::vector<double> a(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) a[i] = samples[i].a;
        const auto m = mean_and_se(a);
        report("generator_zero_mean", m.mean, m.se, std::abs(m.mean) <= 3.0 * m.se);
    }
    // integration by parts
    {
        const std::vector<analysis::TestFunction> phis = {
            {"x^2", [](double x) { return 2.0 * x; }, [](double) { return 2.0; }},
            {"cos", [](double x) { return -std::sin(x); },
             [](double x) { return -std::cos(x); }},
            {"tanh", [](double x) { const double t = std::tanh(x); return 1.0 - t * t; },
             [](double x) {
                 const double t = std::tanh(x);
                 return -2.0 * t * (1.0 - t * t);
             }}};
        const auto checks = analysis::ibp_residual(provider, phis, n, inv.seed, 12,
                                                   inv.workers);
        for (std::size_t i = 0; i < checks.size(); ++i)
            report("ibp_residual_" + phis[i].name, checks[i].mean, checks[i].se,
                   std::abs(checks[i].mean) <= 3.0 * checks[i].se);
    }
    if (provider.capabilities().extended) {
        // zero-mean control identity; eps > 0 where gamma can vanish
        const bool gamma_vanishes = model.preset != "gauss_const_sigma";
        const double eps = gamma_vanishes ? 0.01 : 0.0;
        for (const std::string payload : {"one", "cos"}) {
            std::function<double(double)> phi, phi_x;
            if (payload == "one") {
                phi = [](double) { return 1.0; };
                phi_x = [](double) { return 0.0; };
            } else {
                phi = [](double x) { return std::cos(x); };
                phi_x = [](double x) { return -std::sin(x); };
            }
            const auto samples = sample_batch_extended(provider, n, inv.seed, 13,
                                                       inv.workers, phi, phi_x);
            const auto z = estimators::control_zero_mean(samples, eps);
            report("control_zero_mean_" + payload, z.value, z.se,
                   std::abs(z.value) <= 3.0 * z.se);
        }
        // monotonicity of the regularized direct formula
        const auto samples =
            sample_batch_extended(provider, n, inv.seed, 14, inv.workers);
        const std::vector<double> ladder = {0.3, 0.1, 0.03, 0.01};
        std::vector<double> xs(3);
        double lo = samples[0].x, hi = samples[0].x;
        for (const auto& s : samples) {
            lo = std::min(lo, s.x);
            hi = std::max(hi, s.x);
        }
        for (std::size_t i = 0; i < 3; ++i)
            xs[i] = lo + (hi - lo) * (0.25 + 0.25 * static_cast<double>(i));
        const auto mono = analysis::monotone_feps_check(samples, xs, ladder);
        report("feps_monotone", static_cast<double>(mono.violations.size()), 0.0,
               mono.pass);
    }
    return all_pass ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo with error-structure triplets (X, Gamma[X], A[X])"};
    app.require_subcommand(1);
    app.fallthrough();   // allow `dirichlet-mc density --config ...` ordering
    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    std::optional<unsigned> workers_flag;
    std::string out_dir = ".";
    app.add_option("--config", config_path, "JSON config file")->required();
    app.add_option("--seed", seed_flag, "override config seed");
    app.add_option("--workers", workers_flag, "worker threads");
    app.add_option("--out", out_dir, "output directory");
    auto* simulate = app.add_subcommand("simulate", "dump samples as records");
    auto* density = app.add_subcommand("density", "density estimate on a grid");
    auto* mean = app.add_subcommand("mean", "bias-shifted mean with an epsilon sweep");
    auto* rates = app.add_subcommand("rates", "convergence-rate experiment");
    auto* check = app.add_subcommand("check", "run the statistical invariant suite");
    CLI11_PARSE(app, argc, argv);

    try {
        Invocation inv;
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config file: " + config_path);
        try {
            in >> inv.config;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (seed_flag) {
            inv.seed = *seed_flag;
        } else {
            const auto it = inv.config.find("seed");
            if (it == inv.config.end())
                throw ConfigError("missing field: seed (and no --seed given)");
            if (!it->is_number_unsigned())
                throw ConfigError("field must be a non-negative integer: seed");
            inv.seed = it->get<std::uint64_t>();
        }
        inv.workers = 1;
        if (const char* env = std::getenv("DIRICHLET_MC_WORKERS"))
            inv.workers = static_cast<unsigned>(std::max(1, std::atoi(env)));
        if (workers_flag) inv.workers = std::max(1u, *workers_flag);
        if (inv.config.contains("output")) {
            const json& o = inv.config["output"];
            out_dir = o.value("dir", out_dir);
            const std::string format = o.value("format", std::string("csv"));
            if (format != "csv") throw ConfigError("unknown value for output.format: " + format);
        }
        inv.out_dir = out_dir;

        if (simulate->parsed()) return cmd_simulate(inv);
        if (density->parsed()) return cmd_density(inv);
        if (mean->parsed()) return cmd_mean(inv);
        if (rates->parsed()) return cmd_rates(inv);
        if (check->parsed()) return cmd_check(inv);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
