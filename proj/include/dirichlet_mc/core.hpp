#ifndef DIRICHLET_MC_CORE_HPP
#define DIRICHLET_MC_CORE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"

namespace dmc {

//! One draw of (X, Gamma[X], A[X]) in dimension d.  gamma is the row-major
//! d x d matrix of Gamma[X_i, X_j]; it must be symmetric positive
//! semi-definite and everything must be finite.
struct TripletSample {
    std::vector<double> x;
    std::vector<double> gamma;
    std::vector<double> a;

    std::size_t dim() const { return x.size(); }
};

//! Scalar fast path for the d = 1 case every concrete structure produces.
struct ScalarTriplet {
    double x = 0.0;
    double gamma = 0.0;
    double a = 0.0;

    TripletSample as_triplet() const { return TripletSample{{x}, {gamma}, {a}}; }
};

//! Scalar draw extended with Gamma[X, Gamma[X]] and an optional bounded
//! payload G carrying Gamma[X, G].
//!
//! Gamma[X, 1/(eps+Gamma[X])] is always derived as -gamma_gamma/(eps+gamma)^2;
//! storing Gamma[X, Gamma[X]] lets one sample serve every eps.
struct ExtendedSample {
    double x = 0.0;
    double gamma = 0.0;
    double a = 0.0;
    double gamma_gamma = 0.0;
    std::optional<double> payload_g;
    std::optional<double> gamma_xg;
    bool degenerate = false;   //!< gamma vanished; inverse-gamma formulas unusable

    double gamma_inv_shift(double eps) const {
        const double den = eps + gamma;
        return -gamma_gamma / (den * den);
    }

    ScalarTriplet base() const { return ScalarTriplet{x, gamma, a}; }
};

//! Attach a scalar payload G = phi(X); Gamma[X, phi(X)] = phi'(X) Gamma[X].
inline void attach_payload(ExtendedSample& s, const std::function<double(double)>& phi,
                           const std::function<double(double)>& phi_x) {
    s.payload_g = phi(s.x);
    s.gamma_xg = phi_x(s.x) * s.gamma;
}

struct ValidationReport {
    double max_asymmetry = 0.0;
    double min_eigenvalue = 0.0;
    bool has_nonfinite = false;
    double tol = 0.0;
    bool pass = false;
};

//! Check the square-field invariants of one sample: gamma symmetric within
//! tol, smallest eigenvalue >= -tol, no NaN/Inf anywhere.  Pure report.
inline ValidationReport validate_triplet(const TripletSample& s, double tol) {
    if (tol < 0.0) throw std::invalid_argument("validate_triplet: tol must be >= 0");
    const std::size_t d = s.dim();
    ValidationReport r;
    r.tol = tol;
    r.has_nonfinite = !(linalg::all_finite(s.x) && linalg::all_finite(s.gamma) &&
                        linalg::all_finite(s.a));
    if (s.gamma.size() != d * d || s.a.size() != d) {
        r.has_nonfinite = true;   // malformed shape counts as invalid
        return r;
    }
    if (r.has_nonfinite) return r;
    r.max_asymmetry = linalg::max_asymmetry(s.gamma, d);
    r.min_eigenvalue = linalg::min_eigenvalue_sym(s.gamma, d);
    r.pass = r.max_asymmetry <= tol && r.min_eigenvalue >= -tol;
    return r;
}

inline ValidationReport validate_triplet(const ScalarTriplet& s, double tol) {
    return validate_triplet(s.as_triplet(), tol);
}

//! What a structure can deliver.
struct Capabilities {
    bool triplet = true;
    bool extended = false;
    bool known_density = false;
    //! Sample expressible as a monotone map of a single uniform; enables
    //! stratified low-noise measurement of estimator summands.
    bool inverse_transform = false;
};

//! Uniform access to a simulatable structure: one object produces
//! (X, Gamma[X], A[X]) draws, optionally with Gamma[X, Gamma[X]], from a
//! caller-supplied stream.  Implementations hold no mutable state, so one
//! provider may be shared across workers holding distinct streams.
class StructureProvider {
public:
    virtual ~StructureProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual Capabilities capabilities() const = 0;
    virtual std::string name() const = 0;

    //! d = 1 draw; the common case.
    virtual ScalarTriplet sample_scalar(RngStream& rng) const = 0;

    virtual ExtendedSample sample_extended(RngStream&) const {
        throw std::logic_error(name() + ": extended sampling not supported");
    }

    //! General-d draw; scalar structures wrap the scalar path.
    virtual TripletSample sample_triplet(RngStream& rng) const {
        return sample_scalar(rng).as_triplet();
    }

    //! Exact density, available on validation models only.
    virtual double exact_density(double) const {
        throw std::logic_error(name() + ": exact density unknown");
    }

    //! Deterministic draw from one uniform (inverse_transform capability).
    virtual ScalarTriplet scalar_from_uniform(double) const {
        throw std::logic_error(name() + ": inverse-transform sampling not supported");
    }
};

//! Two independent scalar structures glued into a d = 2 product structure:
//! Gamma is block-diagonal and A stacks componentwise.
class ProductProvider final : public StructureProvider {
public:
    ProductProvider(std::shared_ptr<const StructureProvider> first,
                    std::shared_ptr<const StructureProvider> second)
        : first_(std::move(first)), second_(std::move(second)) {
        if (first_->dimension() != 1 || second_->dimension() != 1)
            throw std::invalid_argument("ProductProvider: factors must be scalar");
    }

    std::size_t dimension() const override { return 2; }
    Capabilities capabilities() const override { return Capabilities{true, false, false, false}; }
    std::string name() const override {
        return first_->name() + "*" + second_->name();
    }

    ScalarTriplet sample_scalar(RngStream&) const override {
        throw std::logic_error("ProductProvider: dimension is 2");
    }

    TripletSample sample_triplet(RngStream& rng) const override {
        const ScalarTriplet u = first_->sample_scalar(rng);
        const ScalarTriplet v = second_->sample_scalar(rng);
        TripletSample out;
        out.x = {u.x, v.x};
        out.gamma = {u.gamma, 0.0, 0.0, v.gamma};
        out.a = {u.a, v.a};
        return out;
    }

private:
    std::shared_ptr<const StructureProvider> first_;
    std::shared_ptr<const StructureProvider> second_;
};

//! Thrown when a simulation leaves the admissible region (non-finite state or
//! an explosion guard trip); carries the step index.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

} // namespace dmc

#endif
