#ifndef DIRICHLET_MC_ESTIMATORS_HPP
#define DIRICHLET_MC_ESTIMATORS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "sampling.hpp"

namespace dmc::estimators {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double sign(double y) { return y > 0.0 ? 1.0 : (y < 0.0 ? -1.0 : 0.0); }

enum class EpsilonCriterion { L2, poly, manual };

//! Bandwidth rule for the randomized kernel: eps = N^{-2/(d+8)} under the L2
//! criterion, eps = N^{-2/(d+4)} under the polynomial criterion.
inline double epsilon_rule(std::size_t n_samples, std::size_t d,
                           EpsilonCriterion criterion) {
    if (n_samples < 2) throw std::invalid_argument("epsilon_rule: N must be >= 2");
    if (d < 1) throw std::invalid_argument("epsilon_rule: d must be >= 1");
    const double n = static_cast<double>(n_samples);
    switch (criterion) {
        case EpsilonCriterion::L2:
            return std::pow(n, -2.0 / (static_cast<double>(d) + 8.0));
        case EpsilonCriterion::poly:
            return std::pow(n, -2.0 / (static_cast<double>(d) + 4.0));
        default:
            throw std::invalid_argument("epsilon_rule: manual rule has no formula");
    }
}

//! Classical-kernel bandwidth realizing the textbook rate under each
//! criterion: h = N^{-1/(d+4)} for L2, h = N^{-1/(d+2)} for the polynomial
//! criterion.
inline double classical_bandwidth(std::size_t n_samples, std::size_t d,
                                  EpsilonCriterion criterion) {
    if (n_samples < 2) throw std::invalid_argument("classical_bandwidth: N >= 2");
    const double n = static_cast<double>(n_samples);
    return criterion == EpsilonCriterion::poly
               ? std::pow(n, -1.0 / (static_cast<double>(d) + 2.0))
               : std::pow(n, -1.0 / (static_cast<double>(d) + 4.0));
}

struct EstimatorConfig {
    EpsilonCriterion rule = EpsilonCriterion::L2;
    double epsilon = 0.0;              //!< used when rule == manual
    std::vector<double> grid;
    double ridge = 1e-8;

    void check() const {
        if (grid.empty()) throw std::invalid_argument("EstimatorConfig: grid is empty");
        if (ridge < 0.0) throw std::invalid_argument("EstimatorConfig: ridge must be >= 0");
        if (rule == EpsilonCriterion::manual && !(epsilon > 0.0))
            throw std::invalid_argument("EstimatorConfig: manual epsilon must be > 0");
    }

    double resolve_epsilon(std::size_t n_samples, std::size_t d) const {
        return rule == EpsilonCriterion::manual ? epsilon
                                                : epsilon_rule(n_samples, d, rule);
    }
};

//! Evenly spaced evaluation grid.
inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
    if (count < 1) throw std::invalid_argument("linear_grid: count must be >= 1");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = 0.5 * (lo + hi);
        return g;
    }
    for (std::size_t i = 0; i < count; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return g;
}

struct DensityEstimate {
    std::vector<double> grid;
    std::vector<double> value;
    std::vector<double> se;
    std::vector<std::size_t> skipped;   //!< singular samples skipped per point
    std::vector<bool> undefined;        //!< every sample skipped at this point
    std::string method;
    double parameter = 0.0;             //!< eps or h
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

struct ShiftedMean {
    std::vector<double> mean;
    double trace_cov = 0.0;
};

//! Mean and covariance trace of the bias-shifted draws X + eps A[X].
//! The expectation is eps-invariant (E A[X] = 0); the trace follows the
//! quadratic trace var[X] - 2 eps sum_i E[X_i] + eps^2 E||A[X]||^2.
inline ShiftedMean shifted_mean(std::span<const TripletSample> samples, double eps) {
    if (samples.empty()) throw std::invalid_argument("shifted_mean: no samples");
    const std::size_t d = samples.front().dim();
    const double n = static_cast<double>(samples.size());
    ShiftedMean out;
    out.mean.assign(d, 0.0);
    std::vector<double> comp(samples.size());
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].dim() != d)
                throw std::invalid_argument("shifted_mean: mixed dimensions");
            comp[i] = samples[i].x[j] + eps * samples[i].a[j];
        }
        const double mu = pairwise_sum(comp) / n;
        out.mean[j] = mu;
        if (samples.size() > 1) {
            std::vector<double> sq(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const double dev = comp[i] - mu;
                sq[i] = dev * dev;
            }
            out.trace_cov += pairwise_sum(sq) / (n - 1.0);
        }
    }
    return out;
}

struct ShiftedMeanScalar {
    double mean = 0.0;
    double se_mean = 0.0;
    double variance = 0.0;
    double se_variance = 0.0;
};

inline ShiftedMeanScalar shifted_mean(std::span<const ScalarTriplet> samples,
                                      double eps) {
    if (samples.empty()) throw std::invalid_argument("shifted_mean: no samples");
    std::vector<double> shifted(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        shifted[i] = samples[i].x + eps * samples[i].a;
    const MeanStderr m = mean_and_se(shifted);
    const VarianceEstimate v = variance_and_se(shifted);
    return {m.mean, m.se, v.value, v.se};
}

struct OptimalEpsilon {
    double epsilon = 0.0;
    double predicted_trace = 0.0;   //!< trace var[X] - (sum_i E[X_i])^2 / E||A||^2
};

//! Variance-optimal shift from the samples themselves: E[X_i] estimated as
//! mean(gamma_ii)/2, the denominator as mean ||a||^2.  Substituting the
//! optimum back into the quadratic gives trace var - (sum E)^2 / ||A||^2.
inline OptimalEpsilon estimate_optimal_epsilon(std::span<const TripletSample> samples) {
    if (samples.empty())
        throw std::invalid_argument("estimate_optimal_epsilon: no samples");
    const std::size_t d = samples.front().dim();
    const double n = static_cast<double>(samples.size());
    std::vector<double> buf(samples.size());
    double dirichlet_sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < samples.size(); ++i)
            buf[i] = samples[i].gamma[j * d + j];
        dirichlet_sum += 0.5 * pairwise_sum(buf) / n;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += samples[i].a[j] * samples[i].a[j];
        buf[i] = s;
    }
    const double a_norm2 = pairwise_sum(buf) / n;
    if (!(a_norm2 > 0.0))
        throw std::domain_error(
            "estimate_optimal_epsilon: A[X] is statistically zero, no variance "
            "reduction available");
    const double base_trace = shifted_mean(samples, 0.0).trace_cov;
    return {dirichlet_sum / a_norm2,
            base_trace - dirichlet_sum * dirichlet_sum / a_norm2};
}

inline OptimalEpsilon estimate_optimal_epsilon(std::span<const ScalarTriplet> samples) {
    if (samples.empty())
        throw std::invalid_argument("estimate_optimal_epsilon: no samples");
    const double n = static_cast<double>(samples.size());
    std::vector<double> buf(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) buf[i] = samples[i].gamma;
    const double dirichlet = 0.5 * pairwise_sum(buf) / n;
    for (std::size_t i = 0; i < samples.size(); ++i) buf[i] = samples[i].a * samples[i].a;
    const double a_norm2 = pairwise_sum(buf) / n;
    if (!(a_norm2 > 0.0))
        throw std::domain_error(
            "estimate_optimal_epsilon: A[X] is statistically zero, no variance "
            "reduction available");
    const double base = shifted_mean(samples, 0.0).variance;
    return {dirichlet / a_norm2, base - dirichlet * dirichlet / a_norm2};
}

//! Multivariate normal density g(z, Sigma + ridge I); nullopt when the
//! ridged matrix is numerically singular (sample-skip signal).
inline std::optional<double> gaussian_kernel_eval(std::span<const double> z,
                                                  std::span<const double> sigma,
                                                  double ridge) {
    const std::size_t d = z.size();
    if (sigma.size() != d * d)
        throw std::invalid_argument("gaussian_kernel_eval: shape mismatch");
    if (ridge < 0.0) throw std::invalid_argument("gaussian_kernel_eval: ridge >= 0");
    std::vector<double> m(sigma.begin(), sigma.end());
    for (std::size_t i = 0; i < d; ++i) m[i * d + i] += ridge;
    const auto qf = linalg::cholesky_quad_form(m, z, d);
    if (!qf) return std::nullopt;
    const double log_density = -0.5 * (static_cast<double>(d) * std::log(kTwoPi) +
                                       qf->log_det + qf->quad);
    const double value = std::exp(log_density);
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

//! Scalar special case: g(z, s2 + ridge).
inline std::optional<double> gaussian_kernel_eval(double z, double s2, double ridge) {
    const double v = s2 + ridge;
    if (!(v > 0.0) || !std::isfinite(v)) return std::nullopt;
    const double value = std::exp(-0.5 * z * z / v) / std::sqrt(kTwoPi * v);
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

namespace detail {

template <class EvalFn>
DensityEstimate kernel_density_impl(std::size_t n_samples,
                                    const std::vector<double>& grid, EvalFn&& eval,
                                    std::string method, double parameter) {
    DensityEstimate out;
    out.grid = grid;
    out.method = std::move(method);
    out.parameter = parameter;
    out.n_samples = n_samples;
    out.value.resize(grid.size());
    out.se.resize(grid.size());
    out.skipped.assign(grid.size(), 0);
    out.undefined.assign(grid.size(), false);
    std::vector<double> terms;
    terms.reserve(n_samples);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        terms.clear();
        for (std::size_t i = 0; i < n_samples; ++i) {
            const std::optional<double> v = eval(grid[p], i);
            if (v)
                terms.push_back(*v);
            else
                ++out.skipped[p];
        }
        if (terms.empty()) {
            out.undefined[p] = true;
            out.value[p] = std::numeric_limits<double>::quiet_NaN();
            out.se[p] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const MeanStderr m = mean_and_se(terms);
        out.value[p] = m.mean;
        out.se[p] = m.se;
    }
    return out;
}

} // namespace detail

//! Randomized-kernel density estimate
//!   f_hat(x) = (1/N) sum_n g(x - X_n - eps A_n, eps Gamma_n + eps ridge I).
//! The kernel center and covariance come from each sample's own error
//! ingredients; eps is resolved by the configured rule.
//! Grid evaluation is scalar; d > 1 summands go through gaussian_kernel_eval
//! directly.  This overload keeps the matrix kernel path exercised for d = 1.
inline DensityEstimate random_kernel_density(std::span<const TripletSample> samples,
                                             const EstimatorConfig& cfg) {
    cfg.check();
    if (samples.empty())
        throw std::invalid_argument("random_kernel_density: no samples");
    if (samples.front().dim() != 1)
        throw std::invalid_argument("random_kernel_density: grid evaluation needs d = 1");
    const double eps = cfg.resolve_epsilon(samples.size(), 1);
    auto eval = [&](double x, std::size_t i) -> std::optional<double> {
        const TripletSample& s = samples[i];
        const double z[1] = {x - s.x[0] - eps * s.a[0]};
        const double scaled[1] = {eps * s.gamma[0]};
        return gaussian_kernel_eval(std::span<const double>(z, 1),
                                    std::span<const double>(scaled, 1),
                                    eps * cfg.ridge);
    };
    return detail::kernel_density_impl(samples.size(), cfg.grid, eval,
                                       "random_kernel", eps);
}

inline DensityEstimate random_kernel_density(std::span<const ScalarTriplet> samples,
                                             const EstimatorConfig& cfg) {
    cfg.check();
    if (samples.empty())
        throw std::invalid_argument("random_kernel_density: no samples");
    const double eps = cfg.resolve_epsilon(samples.size(), 1);
    auto eval = [&](double x, std::size_t i) -> std::optional<double> {
        const ScalarTriplet& s = samples[i];
        return gaussian_kernel_eval(x - s.x - eps * s.a, eps * s.gamma,
                                    eps * cfg.ridge);
    };
    return detail::kernel_density_impl(samples.size(), cfg.grid, eval,
                                       "random_kernel", eps);
}

//! Classical Gaussian-kernel baseline with deterministic bandwidth h.
inline DensityEstimate classical_kde(std::span<const double> xs, double h,
                                     const std::vector<double>& grid) {
    if (!(h > 0.0)) throw std::invalid_argument("classical_kde: h must be > 0");
    if (xs.empty()) throw std::invalid_argument("classical_kde: no samples");
    auto eval = [&](double x, std::size_t i) -> std::optional<double> {
        return gaussian_kernel_eval(x - xs[i], h * h, 0.0);
    };
    return detail::kernel_density_impl(xs.size(), grid, eval, "classical", h);
}

struct PointEstimate {
    double value = 0.0;
    double se = 0.0;
};

namespace detail {

inline void require_usable(std::span<const ExtendedSample> samples, double eps) {
    if (samples.empty()) throw std::invalid_argument("direct formula: no samples");
    if (eps < 0.0) throw std::invalid_argument("direct formula: eps must be >= 0");
    if (eps == 0.0) {
        for (const ExtendedSample& s : samples)
            if (s.degenerate || !(s.gamma > 0.0))
                throw std::domain_error(
                    "direct formula at eps = 0 hit a sample with vanishing Gamma[X]; "
                    "use the regularized estimator with eps > 0");
    }
}

//! Bracket of the conditional-expectation formula for payload G:
//! Gamma[X, G/(eps+Gamma)] + 2 G A / (eps+Gamma), expanded through
//! Gamma[X, G/(eps+Gamma)] = Gamma[X,G]/(eps+Gamma) - G Gamma[X,Gamma[X]]/(eps+Gamma)^2.
inline double payload_bracket(const ExtendedSample& s, double eps) {
    const double den = eps + s.gamma;
    return *s.gamma_xg / den + *s.payload_g * (s.gamma_inv_shift(eps) + 2.0 * s.a / den);
}

} // namespace detail

//! Exact sign-formula density estimate
//!   f_hat(x) = mean of sign(x - X_n) (Gamma[X,1/(eps+Gamma)] + 2A/(eps+Gamma)) / 2
//! with sign(0) = 0.  At eps = 0 this is the exact representation of the
//! density; for eps > 0 it estimates the regularized lower envelope, which
//! increases to the density as eps decreases.
inline PointEstimate direct_density(std::span<const ExtendedSample> samples, double x,
                                    double eps) {
    detail::require_usable(samples, eps);
    std::vector<double> terms(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ExtendedSample& s = samples[i];
        const double den = eps + s.gamma;
        terms[i] = 0.5 * sign(x - s.x) * (s.gamma_inv_shift(eps) + 2.0 * s.a / den);
    }
    const MeanStderr m = mean_and_se(terms);
    return {m.mean, m.se};
}

//! How the control constant c(x) is chosen.
struct ControlSpec {
    enum class Kind { none, mean_sign, optimal, fixed } kind = Kind::optimal;
    double fixed_value = 0.0;

    static ControlSpec none() { return {Kind::none, 0.0}; }
    static ControlSpec mean_sign() { return {Kind::mean_sign, 0.0}; }
    static ControlSpec optimal() { return {Kind::optimal, 0.0}; }
    static ControlSpec fixed(double c) { return {Kind::fixed, c}; }
};

struct ConditionalEstimate {
    double value = 0.0;
    double se = 0.0;
    double control = 0.0;   //!< c(x) actually used
};

//! Estimate of f(x) E[G | X = x]:
//!   mean of (sign(x - X_n) - c(x)) (Gamma[X, G/(eps+Gamma)] + 2 G A/(eps+Gamma)) / 2.
//! The bracket has exact zero mean, so any deterministic c leaves the
//! expectation unchanged.  The default picks the empirically
//! variance-minimizing coefficient (a least-squares projection, so the
//! reported variance never exceeds the c = 0 one); mean_sign uses the
//! empirical mean of sign(x - X).
inline ConditionalEstimate direct_conditional(std::span<const ExtendedSample> samples,
                                              double x, double eps,
                                              ControlSpec control = ControlSpec::optimal()) {
    detail::require_usable(samples, eps);
    for (const ExtendedSample& s : samples)
        if (!s.payload_g || !s.gamma_xg)
            throw std::invalid_argument(
                "direct_conditional: every sample must carry the payload G and "
                "Gamma[X, G]");
    const std::size_t n = samples.size();
    std::vector<double> plain(n), halves(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double b = detail::payload_bracket(samples[i], eps);
        halves[i] = 0.5 * b;
        plain[i] = sign(x - samples[i].x) * halves[i];
    }
    double c = 0.0;
    switch (control.kind) {
        case ControlSpec::Kind::none:
            c = 0.0;
            break;
        case ControlSpec::Kind::fixed:
            c = control.fixed_value;
            break;
        case ControlSpec::Kind::mean_sign: {
            std::vector<double> signs(n);
            for (std::size_t i = 0; i < n; ++i) signs[i] = sign(x - samples[i].x);
            c = pairwise_sum(signs) / static_cast<double>(n);
            break;
        }
        case ControlSpec::Kind::optimal: {
            // c* = cov(plain, half-bracket) / var(half-bracket)
            const double mp = pairwise_sum(plain) / static_cast<double>(n);
            const double mh = pairwise_sum(halves) / static_cast<double>(n);
            std::vector<double> cov(n), var(n);
            for (std::size_t i = 0; i < n; ++i) {
                cov[i] = (plain[i] - mp) * (halves[i] - mh);
                var[i] = (halves[i] - mh) * (halves[i] - mh);
            }
            const double vh = pairwise_sum(var);
            c = vh > 0.0 ? pairwise_sum(cov) / vh : 0.0;
            break;
        }
    }
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) terms[i] = plain[i] - c * halves[i];
    const MeanStderr m = mean_and_se(terms);
    return {m.mean, m.se, c};
}

//! Convenience overload taking the control as a deterministic function c(x).
inline ConditionalEstimate direct_conditional(std::span<const ExtendedSample> samples,
                                              double x, double eps,
                                              const std::function<double(double)>& c) {
    if (!c) throw std::invalid_argument("direct_conditional: null control function");
    return direct_conditional(samples, x, eps, ControlSpec::fixed(c(x)));
}

//! Diagnostic for the zero-mean identity
//!   E[ Gamma[X, G/(eps+Gamma)] + 2 G A/(eps+Gamma) ] = 0;
//! the sample mean must straddle zero.
inline PointEstimate control_zero_mean(std::span<const ExtendedSample> samples,
                                       double eps) {
    detail::require_usable(samples, eps);
    std::vector<double> terms(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].payload_g || !samples[i].gamma_xg)
            throw std::invalid_argument("control_zero_mean: payload required");
        terms[i] = detail::payload_bracket(samples[i], eps);
    }
    const MeanStderr m = mean_and_se(terms);
    return {m.mean, m.se};
}

} // namespace dmc::estimators

#endif
