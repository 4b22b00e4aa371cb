#ifndef DIRICHLET_MC_PRESETS_HPP
#define DIRICHLET_MC_PRESETS_HPP

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "core.hpp"
#include "estimators.hpp"
#include "mcspace.hpp"
#include "poisson.hpp"
#include "rng.hpp"
#include "wiener.hpp"

namespace dmc::presets {

//! Compiled-in validation models with exact derivatives, so experiment runs
//! never depend on user-authored coefficient callables.

struct GaussParams {
    double sigma = 1.0;
    double x0 = 0.0;
    double T = 1.0;
    std::size_t n = 1;
    wiener::ErrorSource source = wiener::ErrorSource::brownian;
    double v0 = 0.0;
};

//! Constant-coefficient model dX = sigma dB: X_T is Gaussian, Gamma[X] is
//! deterministic and X + 2A[X] = x0 holds per sample (for the Brownian error).
inline std::shared_ptr<wiener::WienerProvider> gauss_const_sigma(GaussParams p = {}) {
    wiener::SdeModel m;
    const double s = p.sigma;
    m.sigma = [s](double, double) { return s; };
    m.sigma_x = [](double, double) { return 0.0; };
    m.sigma_xx = [](double, double) { return 0.0; };
    m.r = [](double, double) { return 0.0; };
    m.r_x = [](double, double) { return 0.0; };
    m.r_xx = [](double, double) { return 0.0; };
    m.x0 = p.x0;
    m.T = p.T;
    m.source = p.source;
    m.v0 = p.v0;
    const double sd = std::abs(p.sigma) * std::sqrt(p.T);
    const double x0 = p.x0, T = p.T, sigma = p.sigma;
    std::function<double(double)> density;
    std::function<ScalarTriplet(double)> from_uniform;
    if (p.source == wiener::ErrorSource::brownian) {
        density = [x0, sd](double x) {
            const double z = (x - x0) / sd;
            return std::exp(-0.5 * z * z) / (sd * std::sqrt(estimators::kTwoPi));
        };
        from_uniform = [x0, T, sigma, sd](double u) {
            const double z = inverse_normal_cdf(u);
            return ScalarTriplet{x0 + sd * z, sigma * sigma * T, -0.5 * sd * z};
        };
    }
    return std::make_shared<wiener::WienerProvider>(
        std::move(m), wiener::EulerConfig{p.n, false}, "gauss_const_sigma", density,
        from_uniform);
}

struct GbmParams {
    double sigma = 0.2;
    double rate = 0.05;
    double x0 = 1.0;
    double T = 1.0;
    std::size_t n = 512;
};

//! Linear-coefficient model dX = rate X dt + sigma X dB; the continuous
//! solution is lognormal, which the scheme approaches with O(1/n) bias.
inline std::shared_ptr<wiener::WienerProvider> gbm(GbmParams p = {}) {
    wiener::SdeModel m;
    const double s = p.sigma, r = p.rate;
    m.sigma = [s](double x, double) { return s * x; };
    m.sigma_x = [s](double, double) { return s; };
    m.sigma_xx = [](double, double) { return 0.0; };
    m.r = [r](double x, double) { return r * x; };
    m.r_x = [r](double, double) { return r; };
    m.r_xx = [](double, double) { return 0.0; };
    m.x0 = p.x0;
    m.T = p.T;
    m.source = wiener::ErrorSource::brownian;
    const double mu = (p.rate - 0.5 * p.sigma * p.sigma) * p.T;
    const double sd = p.sigma * std::sqrt(p.T);
    const double x0 = p.x0;
    auto density = [mu, sd, x0](double y) {
        if (!(y > 0.0)) return 0.0;
        const double z = (std::log(y / x0) - mu) / sd;
        return std::exp(-0.5 * z * z) / (y * sd * std::sqrt(estimators::kTwoPi));
    };
    return std::make_shared<wiener::WienerProvider>(
        std::move(m), wiener::EulerConfig{p.n, false}, "gbm", density, nullptr);
}

struct PoissonIntervalParams {
    double mass = 3.0;
};

//! Poisson functional on (0,1) with the boundary-vanishing quartic weight
//! c(x) = x^2 (1-x)^2 and h(x) = x under a uniform intensity; the weight
//! vanishing at both endpoints makes the generator integrate to zero.
inline std::shared_ptr<poisson::PoissonProvider> poisson_interval(
    PoissonIntervalParams p = {}) {
    auto c = [](double x) {
        const double v = x * (1.0 - x);
        return v * v;
    };
    auto c_x = [](double x) { return 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x); };
    auto h = [](double x) { return x; };
    auto h_x = [](double) { return 1.0; };
    auto h_xx = [](double) { return 0.0; };
    return std::make_shared<poisson::PoissonProvider>(
        poisson::make_interval_model(c, c_x, 0.0, 1.0, p.mass, h, h_x, h_xx),
        "poisson_interval");
}

//! Identity functional X = U_0 on the product structure: X is uniform with
//! gamma = w(U_0), a = w'(U_0)/2 and gamma_gamma = w(U_0) w'(U_0).
inline std::shared_ptr<mcspace::McProvider> mc_identity() {
    mcspace::McFunctional f;
    f.m = 1;
    f.k = 0;
    f.F = [](const mcspace::Coords& u, const mcspace::Coords&) { return u[0]; };
    f.dF = [](std::size_t, const mcspace::Coords&, const mcspace::Coords&) {
        return 1.0;
    };
    f.d2F = [](std::size_t, std::size_t, const mcspace::Coords&,
               const mcspace::Coords&) { return 0.0; };
    f.has_full_d2F = true;
    auto density = [](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; };
    return std::make_shared<mcspace::McProvider>(std::move(f), "mc_identity", density);
}

} // namespace dmc::presets

#endif
