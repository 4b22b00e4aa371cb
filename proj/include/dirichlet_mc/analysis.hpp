#ifndef DIRICHLET_MC_ANALYSIS_HPP
#define DIRICHLET_MC_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "estimators.hpp"
#include "quadrature.hpp"
#include "sampling.hpp"

namespace dmc::analysis {

// ---------------------------------------------------------------------------
// log-log slope fitting

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double lo = 0.0;   //!< 95% confidence bounds
    double hi = 0.0;
};

namespace detail {

inline double t_quantile_975(std::size_t df) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                   2.365,  2.306, 2.262, 2.228, 2.201, 2.179,
                                   2.160,  2.145, 2.131, 2.120};
    if (df == 0) return 12.706;
    if (df <= 16) return table[df - 1];
    if (df <= 20) return 2.09;
    if (df <= 30) return 2.04;
    return 1.96;
}

} // namespace detail

//! Least squares on (log x, log y) with a residual-based 95% interval.
inline SlopeFit fit_loglog(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_loglog: need at least two points");
    const std::size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw std::invalid_argument("fit_loglog: inputs must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog: degenerate abscissae");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss_res += r * r;
    }
    if (n > 2) {
        const double se = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
        const double t = detail::t_quantile_975(n - 2);
        fit.lo = fit.slope - t * se;
        fit.hi = fit.slope + t * se;
    } else {
        fit.lo = fit.hi = fit.slope;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// statistical identity tests

struct IdentityCheck {
    double mean = 0.0;
    double se = 0.0;
};

//! C^2 test function supplied through its first two derivatives.
struct TestFunction {
    std::string name;
    std::function<double(double)> dphi;
    std::function<double(double)> d2phi;
};

//! Residual of the integration-by-parts identity
//! E[phi'(X) A[X] + phi''(X) Gamma[X] / 2] = 0 on a scalar structure.
inline std::vector<IdentityCheck> ibp_residual(const StructureProvider& provider,
                                               std::span<const TestFunction> phis,
                                               std::size_t n_samples,
                                               std::uint64_t seed, std::uint32_t job = 0,
                                               unsigned workers = 1) {
    if (provider.dimension() != 1)
        throw std::invalid_argument("ibp_residual: scalar structures only");
    const std::vector<ScalarTriplet> samples =
        sample_batch(provider, n_samples, seed, job, workers);
    std::vector<IdentityCheck> out;
    out.reserve(phis.size());
    std::vector<double> terms(samples.size());
    for (const TestFunction& phi : phis) {
        for (std::size_t i = 0; i < samples.size(); ++i)
            terms[i] = phi.dphi(samples[i].x) * samples[i].a +
                       0.5 * phi.d2phi(samples[i].x) * samples[i].gamma;
        const MeanStderr m = mean_and_se(terms);
        out.push_back({m.mean, m.se});
    }
    return out;
}

// ---------------------------------------------------------------------------
// bias / variance order measurements

enum class KernelMethod { random_kernel, classical };

struct CurvePoint {
    double parameter = 0.0;   //!< eps or h
    double value = 0.0;
    double se = 0.0;
};

struct BiasCurve {
    std::vector<CurvePoint> points;   //!< |estimate - f(x)| per parameter
    SlopeFit slope;
    bool noise_floor = false;   //!< some point had se > bias/3; widen N
};

//! |E f_hat(x) - f(x)| against eps (or h); the provider must expose its exact
//! density.  N is chosen large so statistical noise sits well under the bias.
inline BiasCurve bias_curve(const StructureProvider& provider, KernelMethod method,
                            double x, std::span<const double> params,
                            std::size_t n_large, std::uint64_t seed,
                            std::uint32_t job = 100, unsigned workers = 1) {
    if (params.size() < 2)
        throw std::invalid_argument("bias_curve: need at least two parameter points");
    if (!provider.capabilities().known_density)
        throw std::invalid_argument("bias_curve: provider must expose an exact density");
    const double f_exact = provider.exact_density(x);
    BiasCurve out;
    std::vector<double> terms(n_large);
    std::uint32_t next_job = job;
    for (double p : params) {
        const std::vector<ScalarTriplet> samples =
            sample_batch(provider, n_large, seed, next_job++, workers);
        for (std::size_t i = 0; i < n_large; ++i) {
            const ScalarTriplet& s = samples[i];
            const auto v = method == KernelMethod::random_kernel
                               ? estimators::gaussian_kernel_eval(x - s.x - p * s.a,
                                                                  p * s.gamma, p * 1e-12)
                               : estimators::gaussian_kernel_eval(x - s.x, p * p, 0.0);
            terms[i] = v.value_or(0.0);
        }
        const MeanStderr m = mean_and_se(terms);
        const double bias = std::abs(m.mean - f_exact);
        if (m.se > bias / 3.0) out.noise_floor = true;
        out.points.push_back({p, bias, m.se});
    }
    std::vector<double> xs, ys;
    for (const CurvePoint& c : out.points) {
        xs.push_back(c.parameter);
        ys.push_back(c.value);
    }
    out.slope = fit_loglog(xs, ys);
    return out;
}

struct VarianceScaling {
    std::vector<CurvePoint> points;        //!< empirical var of the summand per eps
    std::vector<double> scaled;            //!< eps^{d/2} * var, the limit check
    SlopeFit slope;
};

//! Empirical variance of the kernel summand g(x - X - eps A, eps Gamma)
//! against eps; the slope approaches -d/2 and eps^{d/2} var approaches the
//! finite limit.
inline VarianceScaling variance_scaling(const StructureProvider& provider,
                                        std::span<const double> x,
                                        std::span<const double> eps_grid,
                                        std::size_t n_samples, std::uint64_t seed,
                                        std::uint32_t job = 200, unsigned workers = 1) {
    if (eps_grid.size() < 2)
        throw std::invalid_argument("variance_scaling: need at least two eps points");
    const std::size_t d = provider.dimension();
    if (x.size() != d) throw std::invalid_argument("variance_scaling: x has wrong dim");
    VarianceScaling out;
    std::uint32_t next_job = job;
    std::vector<double> terms(n_samples);
    std::vector<double> z(d), scaled_gamma(d * d);
    const std::vector<TripletSample> samples =
        sample_batch_triplet(provider, n_samples, seed, next_job++, workers);
    for (double eps : eps_grid) {
        for (std::size_t i = 0; i < n_samples; ++i) {
            const TripletSample& s = samples[i];
            for (std::size_t j = 0; j < d; ++j) z[j] = x[j] - s.x[j] - eps * s.a[j];
            for (std::size_t j = 0; j < d * d; ++j) scaled_gamma[j] = eps * s.gamma[j];
            terms[i] =
                estimators::gaussian_kernel_eval(z, scaled_gamma, eps * 1e-12).value_or(0.0);
        }
        const VarianceEstimate v = variance_and_se(terms);
        out.points.push_back({eps, v.value, v.se});
        out.scaled.push_back(std::pow(eps, 0.5 * static_cast<double>(d)) * v.value);
    }
    std::vector<double> xs, ys;
    for (const CurvePoint& c : out.points) {
        xs.push_back(c.parameter);
        ys.push_back(c.value);
    }
    out.slope = fit_loglog(xs, ys);
    return out;
}

inline VarianceScaling variance_scaling(const StructureProvider& provider, double x,
                                        std::span<const double> eps_grid,
                                        std::size_t n_samples, std::uint64_t seed,
                                        std::uint32_t job = 200, unsigned workers = 1) {
    const double xv[1] = {x};
    return variance_scaling(provider, std::span<const double>(xv, 1), eps_grid,
                            n_samples, seed, job, workers);
}

// ---------------------------------------------------------------------------
// convergence-rate experiment

enum class RateMethod { random_kernel, classical, direct };

inline std::string rate_method_name(RateMethod m) {
    switch (m) {
        case RateMethod::random_kernel: return "random_kernel";
        case RateMethod::classical: return "classical";
        default: return "direct";
    }
}

struct RatePoint {
    std::size_t n = 0;
    double parameter = 0.0;   //!< eps or h used at this N
    double error = 0.0;
    double se = 0.0;
};

struct RateReport {
    std::string method;
    std::string criterion;   //!< "L2", "poly" or "lln"
    std::vector<RatePoint> points;
    SlopeFit slope;
};

struct RateOptions {
    std::vector<double> grid = estimators::linear_grid(-3.0, 3.0, 25);
    std::size_t replications = 8;       //!< per (method, N) cell for L2 / direct
    double point = 0.25;                //!< evaluation point for poly / direct
    std::size_t poly_strata = 1u << 18; //!< stratified draws per poly replication
    std::size_t poly_replications = 4;
    unsigned workers = 1;
};

namespace detail {

inline double trapezoid_weight(std::size_t i, std::size_t count) {
    return (i == 0 || i + 1 == count) ? 0.5 : 1.0;
}

//! Root of the trapezoid-weighted mean of (f_hat - f)^2 over the grid.
inline double grid_l2_error(const estimators::DensityEstimate& est,
                            const StructureProvider& provider) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
        const double w = trapezoid_weight(i, est.grid.size());
        const double diff = est.value[i] - provider.exact_density(est.grid[i]);
        num += w * diff * diff;
        den += w;
    }
    return std::sqrt(num / den);
}

struct ReplicateSummary {
    double error = 0.0;   //!< sqrt(mean of squared per-replicate errors)
    double se = 0.0;
};

inline ReplicateSummary rms_over_replicates(std::span<const double> sq) {
    const MeanStderr m = mean_and_se(sq);
    ReplicateSummary s;
    s.error = std::sqrt(m.mean);
    s.se = m.mean > 0.0 ? m.se / (2.0 * s.error) : 0.0;
    return s;
}

//! Polynomial criterion |E f_hat^2 - f^2| + |E f_hat - f| of the i.i.d. mean
//! estimator, measured through the exact identities E f_hat = E m and
//! E f_hat^2 = (E m)^2 + Var(m)/N with (E m, Var m) estimated from stratified
//! draws of the summand m.  A replicate-based estimate of the same quantity
//! would need ~Var(m)/bias^2 ~ N^{4/5} full replications per cell, which is
//! out of desk range at the top of the ladder.
inline ReplicateSummary poly_criterion(const StructureProvider& provider,
                                       RateMethod method, std::size_t n, double x,
                                       double param, const RateOptions& opt,
                                       std::uint64_t seed, std::uint32_t job) {
    const double f_exact = provider.exact_density(x);
    std::vector<double> values(opt.poly_replications);
    for (std::size_t rep = 0; rep < opt.poly_replications; ++rep) {
        RngStream rng = derive_substream(seed, job, static_cast<std::uint32_t>(rep));
        const std::size_t strata = opt.poly_strata;
        std::vector<double> m(strata);
        for (std::size_t i = 0; i < strata; ++i) {
            const double u = (static_cast<double>(i) + rng.uniform_pos()) /
                             static_cast<double>(strata);
            const ScalarTriplet s = provider.scalar_from_uniform(u);
            const auto v = method == RateMethod::random_kernel
                               ? estimators::gaussian_kernel_eval(
                                     x - s.x - param * s.a, param * s.gamma, 0.0)
                               : estimators::gaussian_kernel_eval(x - s.x,
                                                                  param * param, 0.0);
            m[i] = v.value_or(0.0);
        }
        const double mean_m = pairwise_sum(m) / static_cast<double>(strata);
        std::vector<double> sq(strata);
        for (std::size_t i = 0; i < strata; ++i) {
            const double dev = m[i] - mean_m;
            sq[i] = dev * dev;
        }
        const double var_m = pairwise_sum(sq) / static_cast<double>(strata - 1);
        const double bias = mean_m - f_exact;
        values[rep] = std::abs(var_m / static_cast<double>(n) + 2.0 * f_exact * bias +
                               bias * bias) +
                      std::abs(bias);
    }
    const MeanStderr m = mean_and_se(values);
    return {m.mean, m.se};
}

} // namespace detail

//! Measure the chosen methods' error against N and fit log-log slopes.
//! Criterion L2 uses the grid metric over full replications; criterion poly
//! uses the stratified identity-based measurement at a single point (and
//! requires a known density plus inverse-transform sampling); method direct
//! always measures the plain error at the point (law-of-large-numbers rate).
inline std::vector<RateReport> rate_experiment(const StructureProvider& provider,
                                               std::span<const RateMethod> methods,
                                               std::span<const std::size_t> n_grid,
                                               estimators::EpsilonCriterion criterion,
                                               const RateOptions& opt, std::uint64_t seed,
                                               std::uint32_t job_base = 1000) {
    if (n_grid.size() < 4)
        throw std::invalid_argument("rate_experiment: need at least 4 N points to fit");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("rate_experiment: N grid must increase");
    if (!provider.capabilities().known_density)
        throw std::invalid_argument("rate_experiment: provider must expose an exact density");
    if (criterion == estimators::EpsilonCriterion::manual)
        throw std::invalid_argument("rate_experiment: criterion must be L2 or poly");
    const bool poly = criterion == estimators::EpsilonCriterion::poly;

    std::vector<RateReport> reports;
    std::uint32_t job = job_base;
    for (RateMethod method : methods) {
        RateReport rep;
        rep.method = rate_method_name(method);
        rep.criterion = method == RateMethod::direct ? "lln" : (poly ? "poly" : "L2");
        for (std::size_t n : n_grid) {
            RatePoint pt;
            pt.n = n;
            if (method == RateMethod::direct) {
                pt.parameter = 0.0;
                std::vector<double> sq(opt.replications);
                const double f_exact = provider.exact_density(opt.point);
                for (std::size_t r = 0; r < opt.replications; ++r) {
                    const std::vector<ExtendedSample> samples =
                        sample_batch_extended(provider, n, seed, job++, opt.workers);
                    const auto est =
                        estimators::direct_density(samples, opt.point, 0.0);
                    const double diff = est.value - f_exact;
                    sq[r] = diff * diff;
                }
                const detail::ReplicateSummary s = detail::rms_over_replicates(sq);
                pt.error = s.error;
                pt.se = s.se;
            } else if (poly) {
                if (!provider.capabilities().inverse_transform)
                    throw std::invalid_argument(
                        "rate_experiment: poly criterion needs inverse-transform "
                        "sampling on the provider");
                pt.parameter =
                    method == RateMethod::random_kernel
                        ? estimators::epsilon_rule(n, 1, criterion)
                        : estimators::classical_bandwidth(n, 1, criterion);
                const detail::ReplicateSummary s = detail::poly_criterion(
                    provider, method, n, opt.point, pt.parameter, opt, seed, job++);
                pt.error = s.error;
                pt.se = s.se;
            } else {
                pt.parameter =
                    method == RateMethod::random_kernel
                        ? estimators::epsilon_rule(n, 1, criterion)
                        : estimators::classical_bandwidth(n, 1, criterion);
                std::vector<double> sq(opt.replications);
                for (std::size_t r = 0; r < opt.replications; ++r) {
                    const std::vector<ScalarTriplet> samples =
                        sample_batch(provider, n, seed, job++, opt.workers);
                    estimators::DensityEstimate est;
                    if (method == RateMethod::random_kernel) {
                        estimators::EstimatorConfig cfg;
                        cfg.rule = estimators::EpsilonCriterion::manual;
                        cfg.epsilon = pt.parameter;
                        cfg.grid = opt.grid;
                        est = estimators::random_kernel_density(samples, cfg);
                    } else {
                        std::vector<double> xs(samples.size());
                        for (std::size_t i = 0; i < samples.size(); ++i)
                            xs[i] = samples[i].x;
                        est = estimators::classical_kde(xs, pt.parameter, opt.grid);
                    }
                    const double e = detail::grid_l2_error(est, provider);
                    sq[r] = e * e;
                }
                const detail::ReplicateSummary s = detail::rms_over_replicates(sq);
                pt.error = s.error;
                pt.se = s.se;
            }
            rep.points.push_back(pt);
        }
        std::vector<double> xs, ys;
        for (const RatePoint& p : rep.points) {
            xs.push_back(static_cast<double>(p.n));
            ys.push_back(p.error);
        }
        rep.slope = fit_loglog(xs, ys);
        reports.push_back(std::move(rep));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// monotonicity of the regularized direct formula

struct MonotoneCheck {
    struct Violation {
        double x, eps_coarse, eps_fine, drop, allowance;
    };
    std::vector<Violation> violations;
    bool pass = true;
};

//! On one fixed sample set, the regularized direct-density estimate must not
//! decrease as eps decreases, up to 2 standard errors of the paired
//! difference.
inline MonotoneCheck monotone_feps_check(std::span<const ExtendedSample> samples,
                                         std::span<const double> x_grid,
                                         std::span<const double> eps_ladder) {
    MonotoneCheck out;
    if (eps_ladder.size() < 2) return out;   // nothing to compare
    std::vector<double> ladder(eps_ladder.begin(), eps_ladder.end());
    std::sort(ladder.begin(), ladder.end(), std::greater<>());
    std::vector<double> diff(samples.size());
    for (double x : x_grid) {
        for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
            const double ec = ladder[k], ef = ladder[k + 1];
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const ExtendedSample& s = samples[i];
                const double bc = s.gamma_inv_shift(ec) + 2.0 * s.a / (ec + s.gamma);
                const double bf = s.gamma_inv_shift(ef) + 2.0 * s.a / (ef + s.gamma);
                diff[i] = 0.5 * estimators::sign(x - s.x) * (bf - bc);
            }
            const MeanStderr m = mean_and_se(diff);
            if (m.mean < -2.0 * m.se) {
                out.violations.push_back({x, ec, ef, m.mean, 2.0 * m.se});
                out.pass = false;
            }
        }
    }
    return out;
}

} // namespace dmc::analysis

#endif
