#ifndef DIRICHLET_MC_MCSPACE_HPP
#define DIRICHLET_MC_MCSPACE_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace dmc::mcspace {

//! Per-coordinate weight of the product structure on [0,1]:
//! w(u) = u^2 (1-u)^2 and its derivative w'(u) = 2u(1-u)(1-2u).
inline std::pair<double, double> coordinate_weights(double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::domain_error("coordinate_weights: u must lie in [0,1]");
    const double v = u * (1.0 - u);
    return {v * v, 2.0 * v * (1.0 - 2.0 * u)};
}

using Coords = std::vector<double>;

//! Functional X = F(U; V) of m smooth uniform coordinates U_i and k irregular
//! ones V_j (the V's carry no error and may drive rejection loops inside F).
//! First partials in U are required; the diagonal second partials feed the
//! generator and the full matrix is needed only for extended sampling.
struct McFunctional {
    std::size_t m = 0;
    std::size_t k = 0;
    std::function<double(const Coords&, const Coords&)> F;
    std::function<double(std::size_t, const Coords&, const Coords&)> dF;
    std::function<double(std::size_t, std::size_t, const Coords&, const Coords&)> d2F;
    bool has_full_d2F = false;

    void check() const {
        if (m == 0) throw std::invalid_argument("McFunctional: m must be >= 1");
        if (!F || !dF || !d2F)
            throw std::invalid_argument("McFunctional: F, dF, d2F required");
    }
};

struct McSelfTestReport {
    double max_rel_error = 0.0;
    bool pass = true;
};

//! Finite-difference check of dF and the diagonal of d2F at interior probes.
inline McSelfTestReport partials_selftest(const McFunctional& model,
                                          std::size_t probes, RngStream& rng) {
    model.check();
    McSelfTestReport rep;
    const double tol = 1e-5;
    for (std::size_t p = 0; p < probes; ++p) {
        Coords u(model.m), v(model.k);
        for (auto& ui : u) ui = 0.1 + 0.8 * rng.uniform();
        for (auto& vj : v) vj = rng.uniform();
        for (std::size_t i = 0; i < model.m; ++i) {
            const double step = 1e-5;
            Coords up = u, um = u;
            up[i] += step;
            um[i] -= step;
            const double fd1 = (model.F(up, v) - model.F(um, v)) / (2 * step);
            const double fd2 =
                (model.dF(i, up, v) - model.dF(i, um, v)) / (2 * step);
            auto track = [&](double fd, double stated) {
                const double scale = std::max(std::abs(fd), std::abs(stated));
                if (scale <= 1e-8) return;
                const double rel = std::abs(fd - stated) / scale;
                rep.max_rel_error = std::max(rep.max_rel_error, rel);
                if (rel > tol) rep.pass = false;
            };
            track(fd1, model.dF(i, u, v));
            track(fd2, model.d2F(i, i, u, v));
        }
    }
    return rep;
}

namespace detail {

struct Drawn {
    Coords u, v;
    double x;
    std::vector<double> df;   // first partials at the drawn point
};

inline Drawn draw(const McFunctional& model, RngStream& rng) {
    Drawn d;
    d.u.resize(model.m);
    d.v.resize(model.k);
    for (auto& ui : d.u) ui = rng.uniform();
    for (auto& vj : d.v) vj = rng.uniform();
    d.x = model.F(d.u, d.v);
    d.df.resize(model.m);
    for (std::size_t i = 0; i < model.m; ++i) d.df[i] = model.dF(i, d.u, d.v);
    return d;
}

} // namespace detail

//! Draw U, V uniform and evaluate
//!   gamma = sum_i F_i'^2 w(U_i)
//!   a     = sum_i ( F_ii'' w(U_i) + F_i' w'(U_i) ) / 2
inline ScalarTriplet sample_mc_triplet(const McFunctional& model, RngStream& rng) {
    model.check();
    const detail::Drawn d = detail::draw(model, rng);
    double gamma = 0.0, a = 0.0;
    for (std::size_t i = 0; i < model.m; ++i) {
        const auto [w, wp] = coordinate_weights(d.u[i]);
        gamma += d.df[i] * d.df[i] * w;
        a += 0.5 * model.d2F(i, i, d.u, d.v) * w + 0.5 * d.df[i] * wp;
    }
    return ScalarTriplet{d.x, gamma, a};
}

//! Extended draw additionally carrying
//!   gamma_gamma = Gamma[X, Gamma[X]] = sum_i F_i' (d gamma / d U_i) w(U_i),
//!   d gamma / d U_i = sum_j 2 F_j' F_ji'' w(U_j) + F_i'^2 w'(U_i),
//! which needs the full matrix of second partials.
inline ExtendedSample sample_mc_extended(const McFunctional& model, RngStream& rng) {
    model.check();
    if (!model.has_full_d2F)
        throw std::logic_error(
            "sample_mc_extended: full mixed partials required for extended sampling");
    const detail::Drawn d = detail::draw(model, rng);
    std::vector<double> w(model.m), wp(model.m);
    for (std::size_t i = 0; i < model.m; ++i) {
        const auto [wi, wpi] = coordinate_weights(d.u[i]);
        w[i] = wi;
        wp[i] = wpi;
    }
    ExtendedSample out;
    out.x = d.x;
    for (std::size_t i = 0; i < model.m; ++i) {
        out.gamma += d.df[i] * d.df[i] * w[i];
        out.a += 0.5 * model.d2F(i, i, d.u, d.v) * w[i] + 0.5 * d.df[i] * wp[i];
    }
    for (std::size_t i = 0; i < model.m; ++i) {
        double dgamma_i = d.df[i] * d.df[i] * wp[i];
        for (std::size_t j = 0; j < model.m; ++j)
            dgamma_i += 2.0 * d.df[j] * model.d2F(j, i, d.u, d.v) * w[j];
        out.gamma_gamma += d.df[i] * dgamma_i * w[i];
    }
    out.degenerate = !(out.gamma > 0.0);
    return out;
}

class McProvider final : public StructureProvider {
public:
    McProvider(McFunctional model, std::string name,
               std::function<double(double)> density = nullptr)
        : model_(std::move(model)), name_(std::move(name)), density_(std::move(density)) {
        model_.check();
    }

    std::size_t dimension() const override { return 1; }
    std::string name() const override { return name_; }
    Capabilities capabilities() const override {
        Capabilities c;
        c.extended = model_.has_full_d2F;
        c.known_density = density_ != nullptr;
        return c;
    }

    ScalarTriplet sample_scalar(RngStream& rng) const override {
        return sample_mc_triplet(model_, rng);
    }

    ExtendedSample sample_extended(RngStream& rng) const override {
        return sample_mc_extended(model_, rng);
    }

    double exact_density(double x) const override {
        if (!density_) return StructureProvider::exact_density(x);
        return density_(x);
    }

    const McFunctional& model() const { return model_; }

private:
    McFunctional model_;
    std::string name_;
    std::function<double(double)> density_;
};

} // namespace dmc::mcspace

#endif
