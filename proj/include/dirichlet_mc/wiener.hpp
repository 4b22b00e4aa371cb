#ifndef DIRICHLET_MC_WIENER_HPP
#define DIRICHLET_MC_WIENER_HPP

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace dmc::wiener {

//! Which source carries the error: the driving Brownian path, the initial
//! value (variance v0, generator weight a0), or both independently.
enum class ErrorSource { brownian, initial, both };

inline bool has_brownian(ErrorSource s) { return s != ErrorSource::initial; }
inline bool has_initial(ErrorSource s) { return s != ErrorSource::brownian; }

using Coefficient = std::function<double(double, double)>;   // (x, t) -> value

//! Scalar SDE dX = sigma(X,t) dB + r(X,t) dt with x-derivatives of the
//! coefficients supplied up to second order.
struct SdeModel {
    Coefficient sigma, sigma_x, sigma_xx;
    Coefficient r, r_x, r_xx;
    double x0 = 0.0;
    double T = 1.0;
    ErrorSource source = ErrorSource::brownian;
    double v0 = 0.0;   //!< Gamma[X_0] when the initial value carries error
    double a0 = 0.0;   //!< A[X_0] weight on the initial value (0 = pure variance)

    void check() const {
        if (!(T > 0.0)) throw std::invalid_argument("SdeModel: T must be > 0");
        if (v0 < 0.0) throw std::invalid_argument("SdeModel: v0 must be >= 0");
    }
};

struct EulerConfig {
    std::size_t n = 1;          //!< steps on [0, T]
    bool record_path = false;

    void check() const {
        if (n < 1) throw std::invalid_argument("EulerConfig: n must be >= 1");
    }
};

struct AugmentedCoefficients {
    std::array<double, 3> diffusion;
    std::array<double, 3> drift;
};

//! Coefficients of the joint diffusion for Y = (X, Gamma[X], A[X]) at state
//! y = (x, gamma, alpha) and time s.  The two source terms tied to the
//! Brownian error (sigma^2 in the gamma drift, -sigma/2 in the alpha
//! diffusion) are present only when the Brownian path carries error; under a
//! pure initial-value error both equations are homogeneous.
inline AugmentedCoefficients augmented_coefficients(const SdeModel& model,
                                                    const std::array<double, 3>& y,
                                                    double s) {
    const double x = y[0], gamma = y[1], alpha = y[2];
    const double sg = model.sigma(x, s);
    const double sg_x = model.sigma_x(x, s);
    const double sg_xx = model.sigma_xx(x, s);
    const double rr = model.r(x, s);
    const double rr_x = model.r_x(x, s);
    const double rr_xx = model.r_xx(x, s);
    const double brown = has_brownian(model.source) ? 1.0 : 0.0;

    AugmentedCoefficients c;
    c.diffusion = {sg, 2.0 * sg_x * gamma,
                   -0.5 * sg * brown + 0.5 * sg_xx * gamma + sg_x * alpha};
    c.drift = {rr, sg * sg * brown + (2.0 * rr_x + sg_x * sg_x) * gamma,
               0.5 * rr_xx * gamma + rr_x * alpha};
    for (double v : c.diffusion)
        if (!std::isfinite(v))
            throw SimulationError("augmented_coefficients: non-finite diffusion at x=" +
                                      std::to_string(x) + " s=" + std::to_string(s),
                                  0);
    for (double v : c.drift)
        if (!std::isfinite(v))
            throw SimulationError("augmented_coefficients: non-finite drift at x=" +
                                      std::to_string(x) + " s=" + std::to_string(s),
                                  0);
    return c;
}

namespace detail {

constexpr double kExplosionGuard = 1e12;

inline void guard_state(double x, double gamma, double a, std::size_t step) {
    if (!std::isfinite(x) || !std::isfinite(gamma) || !std::isfinite(a) ||
        std::abs(x) > kExplosionGuard || std::abs(gamma) > kExplosionGuard ||
        std::abs(a) > kExplosionGuard)
        throw SimulationError("euler scheme: state left the admissible region", step);
}

} // namespace detail

struct PathPoint {
    double t, x, gamma, a;
};

//! One Euler path of the triplet (X, Gamma[X], A[X]) on [0, T] with n steps.
//!
//! X follows the plain Euler update.  gamma and a are propagated by applying
//! the square field and the generator to the one-step map itself
//! (J = dX_{k+1}/dX_k = 1 + sigma_x dB + r_x dt):
//!
//!   gamma <- J^2 gamma + sigma^2 dt            (source iff Brownian error)
//!   a     <- J a + (sigma_xx dB + r_xx dt) gamma / 2 - sigma dB / 2  (ditto)
//!
//! so the returned gamma and a are exactly the operators applied to the
//! discrete variable X^n, for every n, and stay valid per sample (gamma >= 0
//! by construction).  A time-discretization of the continuous
//! (Gamma, A)-equations instead would miss the J^2 square at order dt^2.
inline ScalarTriplet euler_triplet(const SdeModel& model, const EulerConfig& cfg,
                                   RngStream& rng,
                                   std::vector<PathPoint>* path = nullptr) {
    model.check();
    cfg.check();
    const double dt = model.T / static_cast<double>(cfg.n);
    const double sqrt_dt = std::sqrt(dt);
    const double brown = has_brownian(model.source) ? 1.0 : 0.0;
    double x = model.x0;
    double gamma = has_initial(model.source) ? model.v0 : 0.0;
    double a = has_initial(model.source) ? model.a0 : 0.0;
    if (path && cfg.record_path) path->push_back({0.0, x, gamma, a});
    for (std::size_t k = 0; k < cfg.n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double db = sqrt_dt * rng.normal();
        const double sg = model.sigma(x, t);
        const double jac = 1.0 + model.sigma_x(x, t) * db + model.r_x(x, t) * dt;
        const double jac_x = model.sigma_xx(x, t) * db + model.r_xx(x, t) * dt;
        const double a_next =
            jac * a + 0.5 * jac_x * gamma - 0.5 * sg * db * brown;
        const double gamma_next = jac * jac * gamma + sg * sg * dt * brown;
        const double x_next = x + sg * db + model.r(x, t) * dt;
        x = x_next;
        gamma = gamma_next;
        a = a_next;
        detail::guard_state(x, gamma, a, k);
        if (path && cfg.record_path)
            path->push_back({t + dt, x, gamma, a});
    }
    return ScalarTriplet{x, gamma, a};
}

//! Euler path of the further-augmented state carrying in addition
//! g = Gamma[X, Gamma[X]] and q = Gamma[Gamma[X], Gamma[X]], obtained by
//! applying the square field bilinearly to the same one-step map
//! (X, gamma) -> (F, H).  With dF/dx = J, dH/dx = 2 J (sigma_xx dB +
//! r_xx dt) gamma + 2 sigma sigma_x dt, dH/dgamma = J^2, dH/dB = 2 J
//! sigma_x gamma, and Gamma[dB] = dt on the Brownian source:
//!
//!   g <- J^3 g + 2 J^2 J_x gamma^2 + 4 J sigma sigma_x gamma dt
//!   q <- H_x^2 gamma + 2 H_x J^2 g + J^4 q + (2 J sigma_x gamma)^2 dt
//!
//! For constant sigma both are identically zero.
inline ExtendedSample euler_extended(const SdeModel& model, const EulerConfig& cfg,
                                     RngStream& rng) {
    model.check();
    cfg.check();
    const double dt = model.T / static_cast<double>(cfg.n);
    const double sqrt_dt = std::sqrt(dt);
    const double brown = has_brownian(model.source) ? 1.0 : 0.0;
    double x = model.x0;
    double gamma = has_initial(model.source) ? model.v0 : 0.0;
    double a = has_initial(model.source) ? model.a0 : 0.0;
    double g = 0.0;   // gamma_0 is deterministic, so Gamma[X_0, gamma_0] = 0
    double q = 0.0;
    for (std::size_t k = 0; k < cfg.n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double db = sqrt_dt * rng.normal();
        const double sg = model.sigma(x, t);
        const double sg_x = model.sigma_x(x, t);
        const double jac = 1.0 + sg_x * db + model.r_x(x, t) * dt;
        const double jac_x = model.sigma_xx(x, t) * db + model.r_xx(x, t) * dt;

        const double h_x = 2.0 * jac * jac_x * gamma + 2.0 * sg * sg_x * dt * brown;
        const double h_w = 2.0 * jac * sg_x * gamma;

        const double g_next = jac * (h_x * gamma + jac * jac * g) +
                              sg * h_w * dt * brown;
        const double q_next = h_x * h_x * gamma + 2.0 * h_x * jac * jac * g +
                              jac * jac * jac * jac * q + h_w * h_w * dt * brown;
        const double a_next = jac * a + 0.5 * jac_x * gamma - 0.5 * sg * db * brown;
        const double gamma_next = jac * jac * gamma + sg * sg * dt * brown;
        const double x_next = x + sg * db + model.r(x, t) * dt;

        x = x_next;
        gamma = gamma_next;
        a = a_next;
        g = g_next;
        q = q_next;
        detail::guard_state(x, gamma, a, k);
        if (!std::isfinite(g) || !std::isfinite(q))
            throw SimulationError("euler_extended: non-finite second-order state", k);
    }
    ExtendedSample out;
    out.x = x;
    out.gamma = gamma;
    out.a = a;
    out.gamma_gamma = g;
    out.degenerate = !(gamma > 0.0);
    return out;
}

struct SelfTestReport {
    double max_rel_error = 0.0;
    double worst_x = 0.0;
    double worst_t = 0.0;
    std::string worst_coefficient;
    bool pass = true;
};

//! Probe the supplied derivatives against central finite differences at
//! random (x, t).  Pass iff the relative error is <= 1e-5 wherever the
//! reference magnitude exceeds 1e-8.
inline SelfTestReport derivative_selftest(const SdeModel& model, std::size_t probes,
                                          RngStream& rng) {
    if (probes < 1) throw std::invalid_argument("derivative_selftest: probes >= 1");
    SelfTestReport rep;
    const double tol = 1e-5;
    auto check = [&](const char* tag, const Coefficient& fn, const Coefficient& d_fn,
                     double x, double t) {
        const double h = 1e-5 * (1.0 + std::abs(x));
        const double fd = (fn(x + h, t) - fn(x - h, t)) / (2.0 * h);
        const double stated = d_fn(x, t);
        const double scale = std::max(std::abs(fd), std::abs(stated));
        if (scale <= 1e-8) return;
        const double rel = std::abs(fd - stated) / scale;
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_x = x;
            rep.worst_t = t;
            rep.worst_coefficient = tag;
        }
        if (rel > tol) rep.pass = false;
    };
    for (std::size_t i = 0; i < probes; ++i) {
        const double x = model.x0 + 2.0 * rng.normal();
        const double t = model.T * rng.uniform();
        check("sigma_x", model.sigma, model.sigma_x, x, t);
        check("sigma_xx", model.sigma_x, model.sigma_xx, x, t);
        check("r_x", model.r, model.r_x, x, t);
        check("r_xx", model.r_x, model.r_xx, x, t);
    }
    return rep;
}

//! Structure provider backed by the augmented Euler scheme.
class WienerProvider final : public StructureProvider {
public:
    WienerProvider(SdeModel model, EulerConfig cfg, std::string name,
                   std::function<double(double)> density = nullptr,
                   std::function<ScalarTriplet(double)> from_uniform = nullptr)
        : model_(std::move(model)),
          cfg_(cfg),
          name_(std::move(name)),
          density_(std::move(density)),
          from_uniform_(std::move(from_uniform)) {
        model_.check();
        cfg_.check();
    }

    std::size_t dimension() const override { return 1; }
    std::string name() const override { return name_; }
    Capabilities capabilities() const override {
        Capabilities c;
        c.extended = true;
        c.known_density = density_ != nullptr;
        c.inverse_transform = from_uniform_ != nullptr;
        return c;
    }

    ScalarTriplet sample_scalar(RngStream& rng) const override {
        return euler_triplet(model_, cfg_, rng);
    }

    ExtendedSample sample_extended(RngStream& rng) const override {
        return euler_extended(model_, cfg_, rng);
    }

    double exact_density(double x) const override {
        if (!density_) return StructureProvider::exact_density(x);
        return density_(x);
    }

    ScalarTriplet scalar_from_uniform(double u) const override {
        if (!from_uniform_) return StructureProvider::scalar_from_uniform(u);
        return from_uniform_(u);
    }

    const SdeModel& model() const { return model_; }
    const EulerConfig& config() const { return cfg_; }

private:
    SdeModel model_;
    EulerConfig cfg_;
    std::string name_;
    std::function<double(double)> density_;
    std::function<ScalarTriplet(double)> from_uniform_;
};

} // namespace dmc::wiener

#endif
